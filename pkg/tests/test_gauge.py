import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aphi.assembly import MaterialField, assemble_curl_curl
from aphi.gauge import (UnsupportedTopologyError, build_gauge_graph, dump_tree,
                        reorder_system, spanning_tree)
from aphi.mesh import (AIR, FACE_LABELS, Box, boundary_entities,
                       build_box_mesh, tag_regions)
from aphi.spaces import DirichletSpec, build_edge_space, build_scalar_space
from oracles import dense_rank

UNIT = ((0, 1), (0, 1), (0, 1))


def _setup(subdivisions, constrain_all=True):
    mesh = build_box_mesh(UNIT, subdivisions)
    bt = boundary_entities(mesh)
    labels = FACE_LABELS if constrain_all else ()
    spec = DirichletSpec(scalar=tuple((l, 0.0) for l in labels), edge=labels)
    scal = build_scalar_space(mesh, bt, spec)
    edge = build_edge_space(mesh, bt, spec)
    return mesh, scal, edge


def test_graph_all_boundary_constrained_222():
    mesh, scal, edge = _setup((2, 2, 2))
    graph = build_gauge_graph(mesh, edge, scal)
    assert graph.gauge_nodes.shape[0] == 1  # the interior node
    assert graph.root is not None
    assert graph.n_vertices == 2
    assert graph.edge_ids.shape[0] == 6  # candidate edges


def test_graph_unconstrained_single_cell():
    mesh, scal, edge = _setup((1, 1, 1), constrain_all=False)
    graph = build_gauge_graph(mesh, edge, scal)
    assert graph.root is None
    assert graph.n_vertices == 8
    assert graph.edge_ids.shape[0] == 12


def test_graph_region_independent():
    # the graph uses topology only; conductor vs air layout cannot matter
    mesh, scal, edge = _setup((2, 2, 2))
    g1 = build_gauge_graph(mesh, edge, scal)
    g2 = build_gauge_graph(mesh, edge, scal)
    assert np.array_equal(g1.edge_vertices, g2.edge_vertices)
    assert np.array_equal(g1.gauge_nodes, g2.gauge_nodes)


def test_spanning_tree_counts():
    mesh, scal, edge = _setup((1, 1, 1), constrain_all=False)
    part = spanning_tree(build_gauge_graph(mesh, edge, scal))
    assert part.tree.size == 7 and part.cotree.size == 5

    mesh, scal, edge = _setup((2, 2, 2))
    part = spanning_tree(build_gauge_graph(mesh, edge, scal))
    assert part.tree.size == 1 and part.cotree.size == 5

    mesh, scal, edge = _setup((3, 3, 3))
    part = spanning_tree(build_gauge_graph(mesh, edge, scal))
    assert part.tree.size == 8  # (3-1)^3 interior nodes


def test_tree_is_acyclic_spanning():
    mesh, scal, edge = _setup((3, 3, 3), constrain_all=False)
    graph = build_gauge_graph(mesh, edge, scal)
    part = spanning_tree(graph)
    assert part.tree.size == graph.n_vertices - 1
    # union-find over tree edges: no cycles, all vertices connected
    parent = list(range(graph.n_vertices))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for pos in part.tree:
        va, vb = graph.edge_vertices[pos]
        ra, rb = find(va), find(vb)
        assert ra != rb, "cycle in spanning tree"
        parent[ra] = rb
    assert len({find(v) for v in range(graph.n_vertices)}) == 1


def test_tree_determinism():
    mesh, scal, edge = _setup((3, 3, 3))
    t1 = spanning_tree(build_gauge_graph(mesh, edge, scal))
    t2 = spanning_tree(build_gauge_graph(mesh, edge, scal))
    assert np.array_equal(t1.tree, t2.tree)
    assert np.array_equal(t1.perm, t2.perm)


@pytest.mark.parametrize("subdivisions,constrain", [
    ((1, 1, 1), False), ((2, 2, 2), True), ((2, 2, 2), False),
    ((3, 3, 3), True), ((3, 2, 2), True)])
def test_tree_count_matches_curl_kernel(subdivisions, constrain):
    mesh, scal, edge = _setup(subdivisions, constrain_all=constrain)
    graph = build_gauge_graph(mesh, edge, scal)
    part = spanning_tree(graph)
    whole = Box(lo=(0, 0, 0), hi=(1, 1, 1))
    mat = MaterialField.uniform(mesh, tag_regions(mesh, [(whole, AIR)]),
                                sigma=0.0, eps=1.0, nu=1.0)
    C = assemble_curl_curl(edge, mat)[edge.free][:, edge.free]
    kernel = edge.n_free - dense_rank(C)
    assert part.tree.size == kernel


def test_cotree_block_nonsingular():
    # the cotree-cotree block of the static curl matrix has full rank
    for subdivisions, constrain in [((2, 2, 2), True), ((3, 3, 3), True),
                                    ((2, 2, 2), False)]:
        mesh, scal, edge = _setup(subdivisions, constrain_all=constrain)
        part = spanning_tree(build_gauge_graph(mesh, edge, scal))
        whole = Box(lo=(0, 0, 0), hi=(1, 1, 1))
        mat = MaterialField.uniform(mesh, tag_regions(mesh, [(whole, AIR)]),
                                    sigma=0.0, eps=1.0, nu=1.0)
        C = assemble_curl_curl(edge, mat)[edge.free][:, edge.free].tocsr()
        RR = C[part.cotree][:, part.cotree]
        assert dense_rank(RR) == part.cotree.size


@given(st.integers(0, 2 ** 31 - 1))
def test_permutation_roundtrip(seed):
    mesh, scal, edge = _setup((2, 2, 2))
    part = spanning_tree(build_gauge_graph(mesh, edge, scal))
    v = np.random.default_rng(seed).standard_normal(part.n_free) \
        + 1j * np.random.default_rng(seed + 1).standard_normal(part.n_free)
    assert np.array_equal(part.restore_vector(part.permute_vector(v)), v)


def test_reorder_symmetric_blocks():
    mesh, scal, edge = _setup((2, 2, 2))
    part = spanning_tree(build_gauge_graph(mesh, edge, scal))
    whole = Box(lo=(0, 0, 0), hi=(1, 1, 1))
    mat = MaterialField.uniform(mesh, tag_regions(mesh, [(whole, AIR)]),
                                sigma=0.0, eps=1.0, nu=1.0)
    W = assemble_curl_curl(edge, mat)[edge.free][:, edge.free]
    Wp = reorder_system(W, part).toarray()
    assert np.allclose(Wp, Wp.T)
    nR = part.cotree.size
    # the reordered leading block is the cotree-cotree block
    ref = W.toarray()[np.ix_(part.cotree, part.cotree)]
    assert np.allclose(Wp[:nR, :nR], ref)


def test_reorder_system_shapes():
    mesh, scal, edge = _setup((2, 2, 2))
    part = spanning_tree(build_gauge_graph(mesh, edge, scal))
    with pytest.raises(ValueError):
        reorder_system(np.zeros(part.n_free + 1), part)


def test_full_rank_curl_cotree_block_at_zero_frequency(academic_built):
    # reordered static curl system: cotree block full rank while the whole
    # matrix is rank deficient
    from aphi.system import build_curl_matrix
    built = academic_built
    W0 = build_curl_matrix(built.bundle, 0.0)
    part = built.partition
    nR = part.cotree.size
    Wp = part.permute_matrix(W0).toarray()
    assert dense_rank(Wp[:nR, :nR]) == nR
    assert dense_rank(W0) == part.n_free - part.tree.size


def test_root_collapse_keeps_graph_connected():
    # collapsing constrained-edge endpoints into one root keeps the gauge
    # graph of any connected box mesh connected: edge paths through
    # constrained edges route through the root
    mesh = build_box_mesh(UNIT, (1, 1, 3))
    bt = boundary_entities(mesh)
    spec = DirichletSpec(edge=FACE_LABELS)
    scal = build_scalar_space(mesh, bt, DirichletSpec())
    edge = build_edge_space(mesh, bt, spec)
    # every edge of a (1,1,3) grid lies on the boundary: nothing left free
    graph = build_gauge_graph(mesh, edge, scal)
    assert graph.edge_ids.size == 0
    assert graph.n_vertices == 1  # just the root


def test_disconnected_graph_raises():
    # the connectivity guard itself, on a hand-built split graph
    from aphi.gauge import GaugeGraph
    graph = GaugeGraph(n_vertices=2, root=None,
                       gauge_nodes=np.array([0, 1]),
                       vertex_of_node=np.array([0, 1]),
                       edge_free_pos=np.array([], dtype=np.int64),
                       edge_ids=np.array([], dtype=np.int64),
                       edge_vertices=np.zeros((0, 2), dtype=np.int64))
    with pytest.raises(UnsupportedTopologyError):
        spanning_tree(graph)


def test_dump_tree_format():
    mesh, scal, edge = _setup((2, 2, 2))
    part = spanning_tree(build_gauge_graph(mesh, edge, scal))
    buf = io.StringIO()
    dump_tree(part, mesh, buf)
    lines = buf.getvalue().strip().splitlines()
    assert len(lines) == part.tree.size
    for line in lines:
        a, b, eid = (int(t) for t in line.split())
        assert tuple(mesh.edges[eid]) == (a, b)
