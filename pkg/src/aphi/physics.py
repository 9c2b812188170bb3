"""Two-step solve orchestration, derived fields, and verification cases.

Step one computes the scalar potential (complex-conductivity Poisson
problem, or its analytic static-limit blocks at omega = 0); step two the
vector potential from the curl system, with the original, tree-cotree
stabilized, or Lagrange-multiplier variant.  The manufactured trigonometric
case provides closed-form sources for convergence studies.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import epsilon_0, mu_0

from .assembly import (MatrixBundle, MaterialField, assemble_charge_vector,
                       assemble_current_vector)
from .gauge import GaugeGraph, TreeCotreePartition
from .mesh import BoundaryTags, Mesh
from .solve import SolveReport, sparse_lu_solve
from .spaces import (EdgeSpace, ScalarSpace, physical_edge_basis,
                     physical_scalar_basis, tensor_quadrature)
from .system import (FrequencyPoint, build_curl_matrix, build_eqs_static_limit,
                     build_eqs_system, build_lagrange_system, build_rhs,
                     build_scaled_divergence, build_stabilized_system,
                     kappa_divergence, scaling_factors)

METHODS = ("original", "tree-cotree", "lagrange")

_ERROR_QUAD_ORDER = 3  # one order above assembly quadrature


@dataclass(frozen=True)
class ManufacturedCase:
    """Closed-form trigonometric solution on the box (pi/2, 3pi/2)^3.

    The prescribed vector potential is divergence-free, has zero tangential
    trace on the boundary, and satisfies curl(curl A) = 3A; the scalar
    potential vanishes on the boundary.  Uniform materials keep the complex
    conductivity constant so the implicit divergence gauge holds exactly.
    """

    sigma: float = 0.0
    eps: float = epsilon_0
    nu: float = 1.0 / mu_0

    domain = ((np.pi / 2, 3 * np.pi / 2),) * 3

    def kappa(self, omega: float) -> complex:
        return self.sigma + 1j * omega * self.eps

    def A(self, points: np.ndarray) -> np.ndarray:
        x, y, z = np.atleast_2d(points).T
        return np.stack([np.sin(x) * np.cos(y) * np.cos(z),
                         -2.0 * np.cos(x) * np.sin(y) * np.cos(z),
                         np.cos(x) * np.cos(y) * np.sin(z)], axis=1)

    def phi(self, points: np.ndarray) -> np.ndarray:
        x, y, z = np.atleast_2d(points).T
        return np.cos(x) * np.cos(y) * np.cos(z)

    def grad_phi(self, points: np.ndarray) -> np.ndarray:
        x, y, z = np.atleast_2d(points).T
        return np.stack([-np.sin(x) * np.cos(y) * np.cos(z),
                         -np.cos(x) * np.sin(y) * np.cos(z),
                         -np.cos(x) * np.cos(y) * np.sin(z)], axis=1)

    def curl_A(self, points: np.ndarray) -> np.ndarray:
        x, y, z = np.atleast_2d(points).T
        return 3.0 * np.stack([-np.cos(x) * np.sin(y) * np.sin(z),
                               np.zeros_like(x),
                               np.sin(x) * np.sin(y) * np.cos(z)], axis=1)

    def curl_curl_A(self, points: np.ndarray) -> np.ndarray:
        return 3.0 * self.A(points)

    def div_A(self, points: np.ndarray) -> np.ndarray:
        x, y, z = np.atleast_2d(points).T
        cxyz = np.cos(x) * np.cos(y) * np.cos(z)
        return cxyz - 2.0 * cxyz + cxyz

    def J_s(self, points: np.ndarray, omega: float) -> np.ndarray:
        k = self.kappa(omega)
        return (3.0 * self.nu + 1j * omega * k) * self.A(points) \
            + k * self.grad_phi(points)

    def rho_s(self, points: np.ndarray, omega: float) -> np.ndarray:
        if self.sigma == 0.0:
            return 3.0 * self.eps * self.phi(points)
        if omega == 0.0:
            raise ValueError("charge density undefined at omega = 0 for sigma > 0; "
                             "run the static check without the manufactured charge")
        return 3.0 * self.kappa(omega) * self.phi(points) / (1j * omega)

    def hcurl_norm_squared(self) -> float:
        """Exact squared H(curl) norm of the prescribed vector potential."""
        half_pi_cubed = (np.pi / 2) ** 3
        return 24.0 * half_pi_cubed


def manufactured_sources(case: ManufacturedCase, points: np.ndarray,
                         omega: float) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise source current density and charge density of the case."""
    return case.J_s(points, omega), case.rho_s(points, omega)


@dataclass(frozen=True)
class ManufacturedSource:
    """SourceModel adapter; the scalar RHS i*omega*q_s is assembled from the
    finite combination 3*kappa*phi, so it stays defined at omega = 0."""

    case: ManufacturedCase

    def eqs_rhs(self, scalar: ScalarSpace, omega: float) -> np.ndarray:
        k = self.case.kappa(omega)
        return assemble_charge_vector(scalar, lambda p: 3.0 * k * self.case.phi(p))

    def charge_vector(self, scalar: ScalarSpace, omega: float) -> np.ndarray:
        return assemble_charge_vector(scalar, lambda p: self.case.rho_s(p, omega))

    def current_vector(self, edge: EdgeSpace, omega: float) -> np.ndarray:
        return assemble_current_vector(edge, lambda p: self.case.J_s(p, omega))


@dataclass(frozen=True)
class BuiltScenario:
    """Everything assembled once per scenario; frequency enters later."""

    mesh: Mesh
    boundary: BoundaryTags
    material: MaterialField
    scalar: ScalarSpace
    edge: EdgeSpace
    bundle: MatrixBundle
    gauge: GaugeGraph
    partition: TreeCotreePartition
    mms: ManufacturedCase | None = None
    methods: tuple[str, ...] = METHODS
    name: str = "scenario"


@dataclass(frozen=True)
class Solution:
    u: np.ndarray               # scalar potential, all nodes (V)
    a: np.ndarray               # vector potential, all edges (Wb/m circulations)
    lam: np.ndarray | None      # multipliers (lagrange method only)
    frequency: FrequencyPoint
    method: str
    delta_D: float              # unscaled kappa-weighted gauge residual
    curl_report: SolveReport
    eqs_reports: tuple[SolveReport, ...] = field(default=())


def solve_eqs_step(built: BuiltScenario, omega: float) -> tuple[np.ndarray, tuple[SolveReport, ...]]:
    """Scalar-potential step; at omega = 0 the analytic block limit is used."""
    bundle = built.bundle
    if omega == 0.0:
        static = build_eqs_static_limit(bundle)
        u_full = built.scalar.lift_vector()
        reports = []
        if static.conductor_free.size:
            rep = sparse_lu_solve(static.K_cc, static.rhs_c)
            u_full[static.conductor_free] = rep.x
            reports.append(rep)
        if static.air_free.size:
            rep = sparse_lu_solve(static.K_aa, static.air_rhs(u_full))
            u_full[static.air_free] = rep.x
            reports.append(rep)
        return u_full, tuple(reports)
    K, rhs = build_eqs_system(bundle, omega)
    rep = sparse_lu_solve(K, rhs)
    return built.scalar.full_vector(rep.x), (rep,)


def run_two_step(built: BuiltScenario, frequency: FrequencyPoint | float,
                 method: str) -> Solution:
    """Solve both steps for one frequency with the selected curl variant.

    Propagates SingularMatrixError (expected for the original variant at
    low frequency) and StaticSingularityError (floating conductor at 0 Hz).
    """
    if not isinstance(frequency, FrequencyPoint):
        frequency = FrequencyPoint(float(frequency))
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    omega = frequency.omega
    bundle = built.bundle

    u_full, eqs_reports = solve_eqs_step(built, omega)

    W = build_curl_matrix(bundle, omega)
    j = build_rhs(bundle, omega, u_full)
    lam = None
    if method == "original":
        rep = sparse_lu_solve(W, j)
        a_free = rep.x
    else:
        factors = scaling_factors(omega, built.material)
        D = build_scaled_divergence(bundle, omega, factors, built.gauge)
        if method == "tree-cotree":
            S, b = build_stabilized_system(W, D, j, built.partition)
            rep = sparse_lu_solve(S, b)
            a_free = built.partition.restore_vector(rep.x)
        else:
            S, b = build_lagrange_system(W, D, j)
            rep = sparse_lu_solve(S, b)
            a_free = rep.x[:W.shape[0]]
            lam = rep.x[W.shape[0]:]

    a_full = built.edge.full_vector(a_free)
    delta = gauge_residual(bundle, omega, a_full, built.gauge)
    return Solution(u=u_full, a=a_full, lam=lam, frequency=frequency,
                    method=method, delta_D=delta, curl_report=rep,
                    eqs_reports=eqs_reports)


def gauge_residual(bundle: MatrixBundle, omega: float, a_full: np.ndarray,
                   gauge: GaugeGraph) -> float:
    """l2 norm of the discrete kappa-weighted divergence of the solution."""
    D = kappa_divergence(bundle, omega, gauge)
    return float(np.linalg.norm(D @ a_full[bundle.edge.free]))


def _cell_edge_coefficients(mesh: Mesh, a_full: np.ndarray) -> np.ndarray:
    return a_full[mesh.cell_edges] * mesh.cell_edge_signs


def hcurl_error(built: BuiltScenario, a_full: np.ndarray,
                case: ManufacturedCase) -> float:
    """H(curl) distance between the discrete and prescribed vector potential,
    by element quadrature one order above the assembly rule."""
    mesh = built.mesh
    pts, wts = tensor_quadrature(_ERROR_QUAD_ORDER)
    W, C = physical_edge_basis(mesh.spacing, pts)
    coeff = _cell_edge_coefficients(mesh, a_full)
    A_h = np.einsum("cl,qld->cqd", coeff, W)
    curl_h = np.einsum("cl,qld->cqd", coeff, C)
    origins = mesh.cell_origins()
    phys = origins[:, None, :] + (pts[None, :, :] + 1.0) * (0.5 * mesh.spacing)
    flat = phys.reshape(-1, 3)
    dA = A_h - case.A(flat).reshape(A_h.shape)
    dC = curl_h - case.curl_A(flat).reshape(curl_h.shape)
    det = mesh.spacing.prod() / 8.0
    err2 = det * np.einsum("q,cq->", wts,
                           np.abs(dA) ** 2 @ np.ones(3) + np.abs(dC) ** 2 @ np.ones(3))
    return float(np.sqrt(err2))


class DerivedFields:
    """Pointwise evaluators for the physical fields of a solution.

    Electroquasistatic parts come from the scalar potential, the
    full-Maxwell corrections from i*omega times the vector potential; the
    totals add the impressed source current where one is defined.
    """

    def __init__(self, built: BuiltScenario, solution: Solution):
        if solution.u.shape[0] != built.mesh.n_nodes or \
                solution.a.shape[0] != built.mesh.n_edges:
            raise ValueError("solution dimensions do not match the scenario mesh")
        self.built = built
        self.solution = solution
        self.omega = solution.frequency.omega

    def _locate(self, points):
        return self.built.mesh.locate_points(points)

    def grad_phi(self, points: np.ndarray) -> np.ndarray:
        mesh = self.built.mesh
        cells, ref = self._locate(points)
        out = np.zeros((ref.shape[0], 3), dtype=complex)
        for i, (c, r) in enumerate(zip(cells, ref)):
            _, grads = physical_scalar_basis(mesh.spacing, r[None, :])
            out[i] = self.solution.u[mesh.cells[c]] @ grads[0]
        return out

    def vector_potential(self, points: np.ndarray) -> np.ndarray:
        return self._edge_field(points, which="value")

    def B(self, points: np.ndarray) -> np.ndarray:
        return self._edge_field(points, which="curl")

    def _edge_field(self, points, which: str) -> np.ndarray:
        mesh = self.built.mesh
        cells, ref = self._locate(points)
        out = np.zeros((ref.shape[0], 3), dtype=complex)
        for i, (c, r) in enumerate(zip(cells, ref)):
            W, C = physical_edge_basis(mesh.spacing, r[None, :])
            basis = W[0] if which == "value" else C[0]
            coeff = self.solution.a[mesh.cell_edges[c]] * mesh.cell_edge_signs[c]
            out[i] = coeff @ basis
        return out

    def _cell_material(self, points, name: str) -> np.ndarray:
        cells, _ = self._locate(points)
        return getattr(self.built.material, name)[cells]

    def E(self, points: np.ndarray) -> np.ndarray:
        return -self.grad_phi(points) - 1j * self.omega * self.vector_potential(points)

    def D_e(self, points: np.ndarray) -> np.ndarray:
        return -self._cell_material(points, "eps")[:, None] * self.grad_phi(points)

    def D_m(self, points: np.ndarray) -> np.ndarray:
        return -1j * self.omega * self._cell_material(points, "eps")[:, None] \
            * self.vector_potential(points)

    def J_e(self, points: np.ndarray) -> np.ndarray:
        return -self._cell_material(points, "sigma")[:, None] * self.grad_phi(points)

    def J_m(self, points: np.ndarray) -> np.ndarray:
        return -1j * self.omega * self._cell_material(points, "sigma")[:, None] \
            * self.vector_potential(points)

    def J_source(self, points: np.ndarray) -> np.ndarray:
        if self.built.mms is not None:
            return self.built.mms.J_s(np.atleast_2d(points), self.omega)
        return np.zeros((np.atleast_2d(points).shape[0], 3), dtype=complex)

    def D_total(self, points: np.ndarray) -> np.ndarray:
        return self.D_e(points) + self.D_m(points)

    def J_total(self, points: np.ndarray) -> np.ndarray:
        return self.J_e(points) + self.J_m(points) + self.J_source(points)


def derived_fields(built: BuiltScenario, solution: Solution) -> DerivedFields:
    return DerivedFields(built, solution)
