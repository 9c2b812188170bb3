"""Legacy ASCII VTK export of meshes and sampled field solutions.

Hexahedra are written as unstructured-grid cell type 12; complex fields
are split into _re/_im vector arrays.  Coordinates are printed with 17
significant digits so parsing the file back reproduces them bit for bit.
"""
from __future__ import annotations

from typing import Mapping

import numpy as np

from .mesh import Mesh, build_box_mesh
from .physics import BuiltScenario, Solution, derived_fields

VTK_HEXAHEDRON = 12

_FIELD_EVALUATORS = (
    ("B", "B"), ("E", "E"), ("D", "D_total"), ("J", "J_total"),
    ("D_e", "D_e"), ("D_m", "D_m"), ("J_e", "J_e"), ("J_m", "J_m"),
)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_vtk(path, mesh: Mesh, point_data: Mapping[str, np.ndarray] | None = None,
              title: str = "aphi export") -> None:
    """Write the mesh and optional per-node vector arrays (real valued)."""
    point_data = dict(point_data or {})
    for name, arr in point_data.items():
        if arr.shape != (mesh.n_nodes, 3):
            raise ValueError(f"field {name!r} must have shape ({mesh.n_nodes}, 3), "
                             f"got {arr.shape}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title.replace("\n", " ")[:255] + "\n")
        fh.write("ASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {mesh.n_nodes} double\n")
        for p in mesh.nodes:
            fh.write(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}\n")
        fh.write(f"CELLS {mesh.n_cells} {mesh.n_cells * 9}\n")
        for cell in mesh.cells:
            fh.write("8 " + " ".join(str(int(n)) for n in cell) + "\n")
        fh.write(f"CELL_TYPES {mesh.n_cells}\n")
        for _ in range(mesh.n_cells):
            fh.write(f"{VTK_HEXAHEDRON}\n")
        if point_data:
            fh.write(f"POINT_DATA {mesh.n_nodes}\n")
            for name, arr in point_data.items():
                fh.write(f"VECTORS {name} double\n")
                for v in arr:
                    fh.write(f"{_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}\n")


def export_vtk(path, built: BuiltScenario, solution: Solution,
               density: int = 1) -> None:
    """Sample the derived fields on a (density x subdivisions) grid of the
    same box and write them as point data."""
    if density < 1:
        raise ValueError("density must be >= 1")
    if density == 1:
        sample = built.mesh
    else:
        sample = build_box_mesh(built.mesh.extents,
                                [density * n for n in built.mesh.subdivisions])
    flds = derived_fields(built, solution)
    pts = sample.nodes
    point_data: dict[str, np.ndarray] = {}
    for name, attr in _FIELD_EVALUATORS:
        values = getattr(flds, attr)(pts)
        point_data[f"{name}_re"] = np.ascontiguousarray(values.real)
        point_data[f"{name}_im"] = np.ascontiguousarray(values.imag)
    write_vtk(path, sample, point_data,
              title=f"{built.name} f={solution.frequency.f:g}Hz {solution.method}")


def read_vtk_points(path) -> np.ndarray:
    """Parse the POINTS block back out of a legacy ASCII VTK file."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    for i, line in enumerate(lines):
        if line.startswith("POINTS"):
            count = int(line.split()[1])
            rows = [tuple(float(t) for t in lines[i + 1 + k].split())
                    for k in range(count)]
            return np.array(rows)
    raise ValueError(f"no POINTS block found in {path}")
