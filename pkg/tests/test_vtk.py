import numpy as np
import pytest

from aphi.mesh import build_box_mesh
from aphi.physics import run_two_step
from aphi.vtk_io import export_vtk, read_vtk_points, write_vtk


def test_mesh_only_file_structure(tmp_path):
    mesh = build_box_mesh(((0, 1), (0, 2), (0, 1)), (2, 1, 1))
    path = tmp_path / "mesh.vtk"
    write_vtk(path, mesh)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# vtk DataFile")
    assert "ASCII" in lines
    assert "DATASET UNSTRUCTURED_GRID" in lines
    assert f"POINTS {mesh.n_nodes} double" in lines
    assert f"CELLS {mesh.n_cells} {mesh.n_cells * 9}" in lines
    types_at = lines.index(f"CELL_TYPES {mesh.n_cells}")
    assert all(lines[types_at + 1 + k] == "12" for k in range(mesh.n_cells))


def test_point_round_trip_bit_exact(tmp_path):
    mesh = build_box_mesh(((0, 0.22), (0, 1 / 3), (0, np.pi)), (3, 2, 2))
    path = tmp_path / "m.vtk"
    write_vtk(path, mesh)
    back = read_vtk_points(path)
    assert back.shape == mesh.nodes.shape
    assert np.array_equal(back, mesh.nodes)


def test_field_export_lengths_and_names(tmp_path, academic_built):
    sol = run_two_step(academic_built, 100.0, "tree-cotree")
    path = tmp_path / "sol.vtk"
    export_vtk(path, academic_built, sol)
    text = path.read_text()
    n = academic_built.mesh.n_nodes
    assert f"POINT_DATA {n}" in text
    for name in ("B_re", "B_im", "E_re", "E_im", "D_re", "D_im", "J_re",
                 "J_im", "D_e_re", "D_m_re", "J_e_re", "J_m_re"):
        assert f"VECTORS {name} double" in text
        block = text.split(f"VECTORS {name} double\n", 1)[1]
        rows = block.splitlines()[:n]
        assert len(rows) == n and all(len(r.split()) == 3 for r in rows)


def test_density_refines_sampling_grid(tmp_path, academic_built):
    sol = run_two_step(academic_built, 0.0, "tree-cotree")
    path = tmp_path / "dense.vtk"
    export_vtk(path, academic_built, sol, density=2)
    pts = read_vtk_points(path)
    assert pts.shape[0] == 7 ** 3  # (2*3 + 1)^3 sampling nodes


def test_field_shape_validation(tmp_path):
    mesh = build_box_mesh(((0, 1), (0, 1), (0, 1)), (1, 1, 1))
    with pytest.raises(ValueError):
        write_vtk(tmp_path / "bad.vtk", mesh,
                  {"B_re": np.zeros((mesh.n_nodes, 2))})


def test_export_deterministic(tmp_path, academic_built):
    sol = run_two_step(academic_built, 100.0, "tree-cotree")
    p1, p2 = tmp_path / "a.vtk", tmp_path / "b.vtk"
    export_vtk(p1, academic_built, sol)
    export_vtk(p2, academic_built, sol)
    assert p1.read_bytes() == p2.read_bytes()
