import math

import pytest
from hypothesis import given, strategies as st

from holo_lattice.lattice import (LatticeError, boundary_phase, brick_wall_graph,
                                  build_dual_interval, build_hex_domain, build_square_domain,
                                  hex_loop_graph, wall_of)


def test_dual_interval_endpoints():
    I = build_dual_interval(0, 3)
    assert I.sites == [0.5, 1.5, 2.5]
    assert (I.k_L, I.k_R, I.n) == (0.5, 2.5, 3)
    assert I.reflect(0.5) == 2.5


def test_primal_interval_sites():
    assert build_dual_interval(-1, 1, "primal").sites == [-1.0, 0.0, 1.0]


@pytest.mark.parametrize("a,b", [(2, 2), (3, 1)])
def test_interval_rejects_empty(a, b):
    with pytest.raises(LatticeError):
        build_dual_interval(a, b)


@given(st.integers(-20, 20), st.integers(1, 15))
def test_dual_interval_size(a, length):
    I = build_dual_interval(a, a + length)
    assert I.n == length
    assert I.k_L == a + 0.5 and I.k_R == a + length - 0.5
    assert all(I.reflect(I.reflect(k)) == k for k in I.sites)


@pytest.mark.parametrize("w,h,faces,edges,boundary", [
    (1, 1, 1, 4, 4),
    (2, 2, 4, 12, 8),
    (3, 1, 3, 10, 8),
])
def test_square_counts(w, h, faces, edges, boundary):
    g = build_square_domain(w, h)
    assert (len(g.faces), g.n_edges, len(g.boundary)) == (faces, edges, boundary)


@given(st.integers(1, 5), st.integers(1, 5))
def test_square_faces_have_four_labeled_edges(w, h):
    g = build_square_domain(w, h)
    for f in g.faces:
        assert set(f.edges) == {"E", "N", "W", "S"}
        assert g.edges[f.edges["N"]] == f.center + 0.5j
        assert g.edges[f.edges["E"]] == f.center + 0.5
    # boundary edges are exactly those with fewer than two faces
    assert g.boundary == frozenset(e for e in range(g.n_edges) if len(g.edge_faces[e]) < 2)


def test_square_rejects_empty():
    with pytest.raises(LatticeError):
        build_square_domain(0, 2)


def test_edge_lookup_roundtrip():
    g = build_square_domain(3, 2)
    for e, z in enumerate(g.edges):
        assert g.edge_id(z) == e
    assert not g.has_edge(1 + 1j)


def test_single_hexagon():
    g = build_hex_domain([(0, 0)])
    G = hex_loop_graph(g)
    assert len(G.vertices) == 6 and len(G.edges) == 6
    assert all(len(v.edges) == 3 for v in g.vertices)


def test_two_hexagons():
    g = build_hex_domain([(0, 0), (1, 0)])
    G = hex_loop_graph(g)
    assert (len(G.vertices), len(G.edges), len(g.faces)) == (10, 11, 2)
    # each vertex: three unit-length spokes to its edge midpoints
    for v in g.vertices:
        for e in v.edges:
            assert abs(abs(g.edge_positions[e] - v.position) - 0.5) < 1e-12


def test_boundary_phases_on_walls():
    g = build_square_domain(2, 2)
    left = g.edge_id(0.5j)
    top = g.edge_id(0.5 + 2j)
    assert wall_of(g, left) == "left" and wall_of(g, top) == "top"
    assert boundary_phase(g, left, "normal").value == 1
    assert boundary_phase(g, top, "tangent").value == 1
    with pytest.raises(LatticeError):
        boundary_phase(g, g.edge_id(1 + 0.5j))


def test_brick_wall_rungs_alternate():
    G = brick_wall_graph(3, 2)
    rungs = [(G.vertices[u], G.vertices[v]) for u, v in G.edges if G.vertices[u][1] == G.vertices[v][1]]
    assert rungs == [((0, 0), (1, 0)), ((1, 1), (2, 1))]
