"""Global sparse matrix and source-vector assembly.

All cells of a box mesh share one geometry, so the unit-weight element
matrices are computed once per mesh and scattered with per-cell material
weights.  Assembly order is fixed (cell-major), and duplicate entries are
summed in canonical CSR order, so repeated runs produce identical arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh, RegionTags
from .spaces import (EdgeSpace, ScalarSpace, physical_edge_basis,
                     physical_scalar_basis, tensor_quadrature)

_QUAD_ORDER = 2  # exact for all bilinear forms on affine box cells

# Source moments use a high-order rule: smooth (trigonometric) sources then
# integrate to machine precision, so the discrete compatibility identity
# between the current moments and the charge moments holds at assembly
# accuracy rather than at quadrature-error level.
_SOURCE_QUAD_ORDER = 10


class MaterialError(ValueError):
    pass


@dataclass(frozen=True)
class MaterialField:
    """Piecewise-constant conductivity, permittivity and reluctivity per cell.

    sigma in S/m (>= 0, exactly 0 on air cells), eps in F/m (> 0), nu in
    m/H (> 0).  The complex conductivity sigma + i*omega*eps is derived per
    frequency, never stored.
    """

    sigma: np.ndarray
    eps: np.ndarray
    nu: np.ndarray
    tags: RegionTags

    def __post_init__(self):
        if np.any(self.eps <= 0) or np.any(self.nu <= 0):
            raise MaterialError("eps and nu must be positive everywhere")
        if np.any(self.sigma < 0):
            raise MaterialError("sigma must be nonnegative")
        if np.any(self.sigma[self.tags.air_cells] != 0):
            raise MaterialError("sigma must vanish on air cells")
        if np.any(self.sigma[self.tags.conductor_cells] == 0):
            raise MaterialError("conductor cells must have sigma > 0")

    def kappa(self, omega: float) -> np.ndarray:
        return self.sigma + 1j * omega * self.eps

    @property
    def max_sigma(self) -> float:
        return float(self.sigma.max())

    @property
    def max_eps(self) -> float:
        return float(self.eps.max())

    @classmethod
    def uniform(cls, mesh: Mesh, tags: RegionTags, sigma: float, eps: float,
                nu: float) -> "MaterialField":
        n = mesh.n_cells
        return cls(sigma=np.full(n, float(sigma)), eps=np.full(n, float(eps)),
                   nu=np.full(n, float(nu)), tags=tags)


def element_matrices(spacing: np.ndarray) -> dict[str, np.ndarray]:
    """Unit-weight element matrices for one box cell.

    K: grad-grad (8x8), M: edge mass (12x12), C: curl-curl (12x12),
    G: grad-edge coupling (12x8) with G[i, j] = int w_i . grad N_j.
    """
    h = np.asarray(spacing, dtype=float)
    det = h.prod() / 8.0
    pts, wts = tensor_quadrature(_QUAD_ORDER)
    _, dN = physical_scalar_basis(h, pts)
    W, C = physical_edge_basis(h, pts)
    wd = wts * det
    K = np.einsum("q,qid,qjd->ij", wd, dN, dN)
    M = np.einsum("q,qid,qjd->ij", wd, W, W)
    Cc = np.einsum("q,qid,qjd->ij", wd, C, C)
    G = np.einsum("q,qid,qjd->ij", wd, W, dN)
    return {"K": K, "M": M, "C": Cc, "G": G}


def _resolve_weight(mat: MaterialField, weight) -> np.ndarray:
    if isinstance(weight, str):
        try:
            return getattr(mat, weight)
        except AttributeError:
            raise ValueError(f"unknown material weight {weight!r}") from None
    w = np.asarray(weight)
    if w.ndim == 0:
        return np.full(mat.sigma.shape, w[()])
    return w


def _scatter(rows: np.ndarray, cols: np.ndarray, vals: np.ndarray,
             shape: tuple[int, int]) -> sp.csr_matrix:
    m = sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape)
    m = m.tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


def assemble_grad_grad(space: ScalarSpace, mat: MaterialField, weight) -> sp.csr_matrix:
    """Weighted stiffness matrix int w grad N_j . grad N_i over all nodes."""
    mesh = space.mesh
    K = element_matrices(mesh.spacing)["K"]
    w = _resolve_weight(mat, weight)
    vals = w[:, None, None] * K[None, :, :]
    rows = np.repeat(mesh.cells, 8, axis=1)
    cols = np.tile(mesh.cells, (1, 8))
    return _scatter(rows, cols, vals, (mesh.n_nodes, mesh.n_nodes))


def assemble_mass(space: EdgeSpace, mat: MaterialField, weight) -> sp.csr_matrix:
    """Weighted edge mass matrix int w w_j . w_i over all edges."""
    mesh = space.mesh
    M = element_matrices(mesh.spacing)["M"]
    w = _resolve_weight(mat, weight)
    s = mesh.cell_edge_signs.astype(float)
    vals = w[:, None, None] * M[None, :, :] * s[:, :, None] * s[:, None, :]
    rows = np.repeat(mesh.cell_edges, 12, axis=1)
    cols = np.tile(mesh.cell_edges, (1, 12))
    return _scatter(rows, cols, vals, (mesh.n_edges, mesh.n_edges))


def assemble_curl_curl(space: EdgeSpace, mat: MaterialField) -> sp.csr_matrix:
    """Reluctivity-weighted curl-curl matrix over all edges."""
    mesh = space.mesh
    C = element_matrices(mesh.spacing)["C"]
    w = _resolve_weight(mat, "nu")
    s = mesh.cell_edge_signs.astype(float)
    vals = w[:, None, None] * C[None, :, :] * s[:, :, None] * s[:, None, :]
    rows = np.repeat(mesh.cell_edges, 12, axis=1)
    cols = np.tile(mesh.cell_edges, (1, 12))
    return _scatter(rows, cols, vals, (mesh.n_edges, mesh.n_edges))


def assemble_grad_coupling(scalar: ScalarSpace, edge: EdgeSpace,
                           mat: MaterialField, weight) -> sp.csr_matrix:
    """Coupling G (n_edges x n_nodes) with G[i, j] = int w grad N_j . w_i."""
    mesh = scalar.mesh
    G = element_matrices(mesh.spacing)["G"]
    w = _resolve_weight(mat, weight)
    s = mesh.cell_edge_signs.astype(float)
    vals = w[:, None, None] * G[None, :, :] * s[:, :, None]
    rows = np.repeat(mesh.cell_edges, 8, axis=1)
    cols = np.tile(mesh.cells, (1, 12))
    return _scatter(rows, cols, vals, (mesh.n_edges, mesh.n_nodes))


def assemble_weak_divergence(scalar: ScalarSpace, edge: EdgeSpace,
                             mat: MaterialField, weight) -> sp.csr_matrix:
    """Weak weighted divergence D = -G^T (n_nodes x n_edges).

    Lowest-order edge functions have discontinuous normal traces, so the
    divergence pairing is realized through integration by parts; the
    boundary term vanishes for test functions supported away from the
    boundary (the gauge rows used downstream).
    """
    return (-assemble_grad_coupling(scalar, edge, mat, weight)).T.tocsr()


def _cell_quadrature_points(mesh: Mesh, order: int) -> tuple[np.ndarray, np.ndarray, float]:
    pts, wts = tensor_quadrature(order)
    origins = mesh.cell_origins()
    h = mesh.spacing
    phys = origins[:, None, :] + (pts[None, :, :] + 1.0) * (0.5 * h)[None, None, :]
    det = h.prod() / 8.0
    return phys, wts, det


def assemble_charge_vector(scalar: ScalarSpace, rho: Callable,
                           quad_order: int = _SOURCE_QUAD_ORDER) -> np.ndarray:
    """Load vector q[i] = int rho N_i over all nodes."""
    mesh = scalar.mesh
    phys, wts, det = _cell_quadrature_points(mesh, quad_order)
    N, _ = physical_scalar_basis(mesh.spacing, tensor_quadrature(quad_order)[0])
    vals = np.asarray(rho(phys.reshape(-1, 3))).reshape(mesh.n_cells, -1)
    contrib = det * np.einsum("cq,q,ql->cl", vals, wts, N)
    out = np.zeros(mesh.n_nodes, dtype=contrib.dtype)
    np.add.at(out, mesh.cells, contrib)
    return out.astype(complex)


def assemble_current_vector(edge: EdgeSpace, current: Callable,
                            quad_order: int = _SOURCE_QUAD_ORDER) -> np.ndarray:
    """Load vector j[i] = int J . w_i over all edges."""
    mesh = edge.mesh
    phys, wts, det = _cell_quadrature_points(mesh, quad_order)
    W, _ = physical_edge_basis(mesh.spacing, tensor_quadrature(quad_order)[0])
    vals = np.asarray(current(phys.reshape(-1, 3))).reshape(mesh.n_cells, -1, 3)
    contrib = det * np.einsum("cqd,q,qld->cl", vals, wts, W)
    contrib = contrib * mesh.cell_edge_signs
    out = np.zeros(mesh.n_edges, dtype=contrib.dtype)
    np.add.at(out, mesh.cell_edges, contrib)
    return out.astype(complex)


class SourceModel(Protocol):
    """Volume sources of a scenario, assembled per frequency."""

    def eqs_rhs(self, scalar: ScalarSpace, omega: float) -> np.ndarray:
        """i*omega*q_s over all nodes; must stay finite as omega -> 0."""

    def charge_vector(self, scalar: ScalarSpace, omega: float) -> np.ndarray:
        """q_s over all nodes; may raise where the charge density is undefined."""

    def current_vector(self, edge: EdgeSpace, omega: float) -> np.ndarray:
        """j_s over all edges."""


@dataclass(frozen=True)
class NoSource:
    def eqs_rhs(self, scalar: ScalarSpace, omega: float) -> np.ndarray:
        return np.zeros(scalar.entity_count, dtype=complex)

    def charge_vector(self, scalar: ScalarSpace, omega: float) -> np.ndarray:
        return np.zeros(scalar.entity_count, dtype=complex)

    def current_vector(self, edge: EdgeSpace, omega: float) -> np.ndarray:
        return np.zeros(edge.entity_count, dtype=complex)


@dataclass(frozen=True)
class MatrixBundle:
    """All frequency-independent matrices of one scenario, full entity size.

    Frequency-dependent systems are scalar combinations of these; free-DOF
    restriction and Dirichlet lifts happen when the per-frequency systems
    are formed.
    """

    mesh: Mesh
    scalar: ScalarSpace
    edge: EdgeSpace
    material: MaterialField
    K_sigma: sp.csr_matrix
    K_eps: sp.csr_matrix
    G_sigma: sp.csr_matrix
    G_eps: sp.csr_matrix
    M_sigma: sp.csr_matrix
    M_eps: sp.csr_matrix
    C_nu: sp.csr_matrix
    D_sigma: sp.csr_matrix
    D_eps: sp.csr_matrix
    source: SourceModel = field(default_factory=NoSource)

    def K_kappa(self, omega: float) -> sp.csr_matrix:
        return (self.K_sigma + 1j * omega * self.K_eps).tocsr()

    def G_kappa(self, omega: float) -> sp.csr_matrix:
        return (self.G_sigma + 1j * omega * self.G_eps).tocsr()

    def M_kappa(self, omega: float) -> sp.csr_matrix:
        return (self.M_sigma + 1j * omega * self.M_eps).tocsr()

    def D_kappa(self, omega: float) -> sp.csr_matrix:
        return (self.D_sigma + 1j * omega * self.D_eps).tocsr()


def assemble_bundle(scalar: ScalarSpace, edge: EdgeSpace, material: MaterialField,
                    source: SourceModel | None = None) -> MatrixBundle:
    G_sigma = assemble_grad_coupling(scalar, edge, material, "sigma")
    G_eps = assemble_grad_coupling(scalar, edge, material, "eps")
    return MatrixBundle(
        mesh=scalar.mesh, scalar=scalar, edge=edge, material=material,
        K_sigma=assemble_grad_grad(scalar, material, "sigma"),
        K_eps=assemble_grad_grad(scalar, material, "eps"),
        G_sigma=G_sigma,
        G_eps=G_eps,
        M_sigma=assemble_mass(edge, material, "sigma"),
        M_eps=assemble_mass(edge, material, "eps"),
        C_nu=assemble_curl_curl(edge, material),
        D_sigma=(-G_sigma).T.tocsr(),
        D_eps=(-G_eps).T.tocsr(),
        source=source if source is not None else NoSource(),
    )
