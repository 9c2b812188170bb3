import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from aphi.assembly import MaterialField, assemble_curl_curl
from aphi.mesh import (AIR, FACE_LABELS, Box, boundary_entities,
                       build_box_mesh, tag_regions)
from aphi.solve import (SingularMatrixError, condition_estimate,
                        sparse_lu_solve)
from aphi.spaces import DirichletSpec, build_edge_space
from oracles import dense_condition


def _random_sparse(n, rng, density=0.05):
    A = sp.random(n, n, density=density, random_state=np.random.RandomState(7),
                  format="csr")
    A = A + 1j * sp.random(n, n, density=density,
                           random_state=np.random.RandomState(8), format="csr")
    # diagonal dominance keeps it comfortably nonsingular
    return (A + sp.diags(10.0 + rng.standard_normal(n))).tocsr()


def test_identity_system():
    b = np.arange(1.0, 6.0) + 1j
    rep = sparse_lu_solve(sp.eye(5, format="csr"), b)
    assert np.array_equal(rep.x, b)
    assert rep.rel_residual == 0.0


def test_random_system_matches_dense_oracle(rng):
    A = _random_sparse(100, rng)
    b = rng.standard_normal(100) + 1j * rng.standard_normal(100)
    rep = sparse_lu_solve(A, b)
    x_dense = np.linalg.solve(A.toarray(), b)
    assert np.linalg.norm(rep.x - x_dense) / np.linalg.norm(x_dense) < 1e-10
    assert rep.rel_residual < 1e-10


def test_residual_reported_from_scratch(rng):
    A = _random_sparse(50, rng)
    b = rng.standard_normal(50) + 0j
    rep = sparse_lu_solve(A, b)
    recomputed = np.linalg.norm(A @ rep.x - b) / np.linalg.norm(b)
    assert np.isclose(rep.rel_residual, recomputed, rtol=1e-12)


def test_singular_curl_matrix_detected():
    # the static curl system on the all-constrained cube is rank-deficient
    mesh = build_box_mesh(((0, 1),) * 3, (2, 2, 2))
    bt = boundary_entities(mesh)
    edge = build_edge_space(mesh, bt, DirichletSpec(edge=FACE_LABELS))
    whole = Box(lo=(0, 0, 0), hi=(1, 1, 1))
    mat = MaterialField.uniform(mesh, tag_regions(mesh, [(whole, AIR)]),
                                sigma=0.0, eps=1.0, nu=1.0)
    C = assemble_curl_curl(edge, mat)[edge.free][:, edge.free]
    rng = np.random.default_rng(3)
    with pytest.raises(SingularMatrixError):
        sparse_lu_solve(C.astype(complex), rng.standard_normal(edge.n_free))


def test_structurally_singular_detected():
    A = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(SingularMatrixError):
        sparse_lu_solve(A, np.ones(2))


def test_badly_row_scaled_system_still_solves():
    # conductor-vs-air style row imbalance (1e17) must not trip the
    # singularity detection after equilibration
    n = 40
    rng = np.random.default_rng(0)
    base = sp.diags(2.0 + rng.random(n)) + 0.5 * sp.eye(n, k=1) + 0.5 * sp.eye(n, k=-1)
    scale = np.ones(n)
    scale[n // 2:] = 1e-17
    A = (sp.diags(scale) @ base).tocsr().astype(complex)
    b = sp.diags(scale) @ np.ones(n)
    rep = sparse_lu_solve(A, b)
    assert rep.rel_residual < 1e-10


def test_non_square_rejected():
    with pytest.raises(ValueError):
        sparse_lu_solve(sp.csr_matrix(np.ones((2, 3))), np.ones(2))


def test_condition_identity_and_diagonal():
    assert condition_estimate(sp.eye(4, format="csr")).value == pytest.approx(1.0)
    est = condition_estimate(sp.diags([1.0, 10.0]).tocsr())
    assert est.value == pytest.approx(10.0)
    assert est.method == "dense-svd"


def test_condition_power_iteration_matches_dense(rng):
    A = _random_sparse(500, rng)
    dense = dense_condition(A)
    est = condition_estimate(A, dense_limit=100)
    assert est.method == "power-iteration"
    assert abs(est.value - dense) / dense < 0.05


def test_condition_singular_flagged():
    A = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    est = condition_estimate(A)
    assert est.singular and np.isinf(est.value)


@given(st.floats(min_value=1e-6, max_value=1e6))
def test_condition_scale_invariant(alpha):
    A = sp.csr_matrix(np.array([[3.0, 1.0], [0.0, 2.0]], dtype=complex))
    k1 = condition_estimate(A).value
    k2 = condition_estimate((alpha * A).tocsr()).value
    assert abs(k1 - k2) <= 1e-12 * k1
