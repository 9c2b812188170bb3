"""Per-frequency linear systems of the two-step formulation.

Step one is the scalar-potential (electroquasistatic) system; step two the
curl system for the vector potential, either in its original form, with a
Lagrange multiplier enforcing the scaled divergence constraint, or with
the tree rows replaced by that constraint (the square stabilized system).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .assembly import MatrixBundle
from .gauge import GaugeGraph, TreeCotreePartition

DEFAULT_SIGMA_ART = 1e-6


class StaticSingularityError(RuntimeError):
    """A conductor component has no scalar Dirichlet node at omega = 0."""

    def __init__(self, component_node: int):
        super().__init__(
            f"floating conductor component (contains node {component_node}) "
            "makes the static current-flow block singular")
        self.component_node = component_node


@dataclass(frozen=True)
class FrequencyPoint:
    """Ordinary frequency in Hz with the derived angular frequency."""

    f: float

    def __post_init__(self):
        if self.f < 0:
            raise ValueError(f"frequency must be >= 0, got {self.f}")

    @property
    def omega(self) -> float:
        return 2.0 * np.pi * self.f


@dataclass(frozen=True)
class ScalingFactors:
    beta: float
    gamma: float
    sigma_art: float = DEFAULT_SIGMA_ART

    def __post_init__(self):
        if self.beta <= 0 or self.gamma <= 0:
            raise ValueError("scaling factors must be positive")


def scaling_factors(omega: float, material, sigma_art: float = DEFAULT_SIGMA_ART) -> ScalingFactors:
    """beta = 1 + omega, gamma = (1 + omega)(max sigma + sigma_art)/max eps."""
    beta = 1.0 + omega
    gamma = (1.0 + omega) * (material.max_sigma + sigma_art) / material.max_eps
    return ScalingFactors(beta=beta, gamma=gamma, sigma_art=sigma_art)


def build_eqs_system(bundle: MatrixBundle, omega: float) -> tuple[sp.csr_matrix, np.ndarray]:
    """Scalar-potential system on free nodes with Dirichlet lift in the RHS."""
    scal = bundle.scalar
    K = bundle.K_kappa(omega)
    rhs = bundle.source.eqs_rhs(scal, omega)[scal.free]
    if scal.constrained.size:
        rhs = rhs - K[scal.free][:, scal.constrained] @ scal.values
    return K[scal.free][:, scal.free].tocsr(), rhs


@dataclass(frozen=True)
class StaticEqsSystem:
    """Block lower-triangular omega -> 0 limit of the scalar system.

    Conductor rows carry the stationary current-flow problem; air rows the
    electrostatic problem driven by the conductor solution.
    """

    bundle: MatrixBundle
    conductor_free: np.ndarray   # node ids
    air_free: np.ndarray         # node ids
    K_cc: sp.csr_matrix
    rhs_c: np.ndarray
    K_aa: sp.csr_matrix

    def air_rhs(self, u_full: np.ndarray) -> np.ndarray:
        scal = self.bundle.scalar
        q = self.bundle.source.charge_vector(scal, 0.0)
        others = np.concatenate([self.conductor_free, scal.constrained])
        rhs = q[self.air_free]
        if others.size:
            rhs = rhs - self.bundle.K_eps[self.air_free][:, others] @ u_full[others]
        return rhs


def build_eqs_static_limit(bundle: MatrixBundle) -> StaticEqsSystem:
    """Assemble the static block system; raises StaticSingularityError for
    floating conductor components (no Dirichlet node)."""
    scal = bundle.scalar
    tags = bundle.material.tags
    _check_conductor_components(bundle)
    free_mask = np.zeros(bundle.mesh.n_nodes, dtype=bool)
    free_mask[scal.free] = True
    conductor_free = np.flatnonzero(free_mask & tags.conductor_nodes)
    air_free = np.flatnonzero(free_mask & ~tags.conductor_nodes)

    K_cc = bundle.K_sigma[conductor_free][:, conductor_free].tocsr()
    rhs_c = bundle.source.eqs_rhs(scal, 0.0)[conductor_free]
    if scal.constrained.size:
        rhs_c = rhs_c - bundle.K_sigma[conductor_free][:, scal.constrained] @ scal.values
    K_aa = bundle.K_eps[air_free][:, air_free].tocsr()
    return StaticEqsSystem(bundle=bundle, conductor_free=conductor_free,
                           air_free=air_free, K_cc=K_cc, rhs_c=rhs_c, K_aa=K_aa)


def _check_conductor_components(bundle: MatrixBundle) -> None:
    mesh = bundle.mesh
    tags = bundle.material.tags
    cc = np.flatnonzero(tags.conductor_cells)
    if cc.size == 0:
        return
    eids = np.unique(mesh.cell_edges[cc].ravel())
    a, b = mesh.edges[eids, 0], mesh.edges[eids, 1]
    n = mesh.n_nodes
    adj = sp.coo_matrix((np.ones(a.size), (a, b)), shape=(n, n))
    ncomp, labels = connected_components(adj, directed=False)
    constrained = np.zeros(n, dtype=bool)
    constrained[bundle.scalar.constrained] = True
    conductor_nodes = np.flatnonzero(tags.conductor_nodes)
    for comp in np.unique(labels[conductor_nodes]):
        members = np.flatnonzero((labels == comp) & tags.conductor_nodes)
        if not constrained[members].any():
            raise StaticSingularityError(int(members.min()))


def build_curl_matrix(bundle: MatrixBundle, omega: float) -> sp.csr_matrix:
    """W = C_nu + i*omega*M_sigma - omega^2*M_eps on free edges (complex
    symmetric; rank-deficient by the tree count at omega = 0)."""
    fe = bundle.edge.free
    W = bundle.C_nu + 1j * omega * bundle.M_sigma - omega ** 2 * bundle.M_eps
    return W.tocsr()[fe][:, fe].tocsr().astype(complex)


def build_rhs(bundle: MatrixBundle, omega: float, u_full: np.ndarray) -> np.ndarray:
    """Right-hand side j(u) = j_s - G_kappa u on free edges; u includes the
    prescribed Dirichlet values."""
    j = bundle.source.current_vector(bundle.edge, omega) - bundle.G_kappa(omega) @ u_full
    return j[bundle.edge.free]


def build_scaled_divergence(bundle: MatrixBundle, omega: float,
                            factors: ScalingFactors,
                            gauge: GaugeGraph) -> sp.csr_matrix:
    """Region-scaled divergence constraint rows (gauge nodes x free edges).

    Conductor-node rows carry the complex-conductivity weighting
    beta * (D_sigma + i*omega*D_eps); air-node rows the permittivity
    weighting gamma * D_eps.  Every row keeps a frequency-independent part
    (sigma in the conductor, eps in air), so none vanishes at omega = 0,
    while for omega > 0 each row is a positive multiple of the implicit
    divergence constraint already satisfied by the unstabilized solution.
    """
    tags = bundle.material.tags
    cond = tags.conductor_nodes.astype(float)
    core = sp.diags(cond) @ bundle.D_kappa(omega) + sp.diags(1.0 - cond) @ bundle.D_eps
    row_scale = np.where(tags.conductor_nodes, factors.beta, factors.gamma)
    D = sp.diags(row_scale) @ core
    return D.tocsr()[gauge.gauge_nodes][:, bundle.edge.free].tocsr()


def kappa_divergence(bundle: MatrixBundle, omega: float,
                     gauge: GaugeGraph) -> sp.csr_matrix:
    """Unscaled, true-kappa weak divergence on the gauge rows; this is the
    operator behind the delta_D diagnostic, independent of beta/gamma."""
    D = bundle.D_kappa(omega)
    return D[gauge.gauge_nodes][:, bundle.edge.free].tocsr()


def build_lagrange_system(W: sp.spmatrix, D: sp.spmatrix,
                          rhs: np.ndarray) -> tuple[sp.csr_matrix, np.ndarray]:
    """Saddle system [[W, D^T], [D, 0]] [a; lambda] = [j; 0]."""
    if D.shape[1] != W.shape[0]:
        raise ValueError(f"divergence columns {D.shape[1]} != system size {W.shape[0]}")
    S = sp.bmat([[W, D.T], [D, None]], format="csr")
    b = np.concatenate([rhs, np.zeros(D.shape[0], dtype=complex)])
    return S, b


def build_stabilized_system(W: sp.spmatrix, D: sp.spmatrix, rhs: np.ndarray,
                            partition: TreeCotreePartition
                            ) -> tuple[sp.csr_matrix, np.ndarray]:
    """Square system in [R | T] order: cotree rows of W on top, the
    divergence constraint replacing the (statically redundant) tree rows.

    The returned unknown is in [R | T] order; undo it with
    partition.restore_vector.
    """
    if D.shape[0] != partition.tree.shape[0]:
        raise AssertionError(
            f"divergence rows {D.shape[0]} != tree count {partition.tree.shape[0]}; "
            "gauge construction invariant violated")
    rows = sp.vstack([W.tocsr()[partition.cotree], D.tocsr()])
    S = rows.tocsr()[:, partition.perm].tocsr()
    b = np.concatenate([np.asarray(rhs)[partition.cotree],
                        np.zeros(D.shape[0], dtype=complex)])
    return S, b
