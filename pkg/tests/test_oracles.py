import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csagent.bruteforce import brute_force_community, is_truss_edge_set_valid, satisfies
from csagent.errors import Disconnected, GraphTooLarge, KTooSmall, TooSmall, VertexNotInGraph
from csagent.graph import MetricKind, build_graph, is_connected_set
from csagent.oracles import (
    Metric,
    community,
    global_min_cut,
    k_clique_community,
    k_core_community,
    k_ecc_community,
    k_truss_community,
)

from conftest import K4, K4_PENDANT, TRIANGLE, graphs, random_graph

PATH3 = build_graph(3, [(0, 1), (1, 2)])
C4 = build_graph(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
BOWTIE = build_graph(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)])
TWO_K4_BRIDGE = build_graph(8, [(u, v) for u in range(4) for v in range(u + 1, 4)]
                            + [(u, v) for u in range(4, 8) for v in range(u + 1, 8)] + [(3, 4)])
TWO_TRI_BRIDGE = build_graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])


def test_core_examples(kernel):
    assert k_core_community(TRIANGLE, 0, 2, backend=kernel) == {0, 1, 2}
    assert k_core_community(K4_PENDANT, 0, 3, backend=kernel) == {0, 1, 2, 3}
    assert k_core_community(PATH3, 0, 2, backend=kernel) == frozenset()


def test_truss_examples(kernel):
    assert k_truss_community(K4, 0, 4, backend=kernel) == {0, 1, 2, 3}
    assert k_truss_community(TRIANGLE, 1, 3, backend=kernel) == {0, 1, 2}
    assert k_truss_community(BOWTIE, 0, 3, backend=kernel) == {0, 1, 2, 3, 4}
    with pytest.raises(KTooSmall):
        k_truss_community(K4, 0, 2, backend=kernel)


def test_clique_examples(kernel):
    assert k_clique_community(K4, 2, 4, backend=kernel) == {0, 1, 2, 3}
    g = build_graph(5, list(K4.edges()) + [(0, 4)])
    assert k_clique_community(g, 0, 3, backend=kernel) == {0, 1, 2, 3}
    assert k_clique_community(TRIANGLE, 0, 4, backend=kernel) == frozenset()


def test_clique_lexicographic_tie(kernel):
    # two triangles through 0: {0,1,2} and {0,3,4}
    g = build_graph(5, [(0, 1), (0, 2), (1, 2), (0, 3), (0, 4), (3, 4)])
    assert k_clique_community(g, 0, 3, backend=kernel) == {0, 1, 2}


def test_ecc_examples(kernel):
    assert k_ecc_community(C4, 0, 2, backend=kernel) == {0, 1, 2, 3}
    assert k_ecc_community(PATH3, 1, 2, backend=kernel) == frozenset()
    assert k_ecc_community(TWO_K4_BRIDGE, 1, 3, backend=kernel) == {0, 1, 2, 3}
    assert k_ecc_community(TWO_K4_BRIDGE, 6, 3, backend=kernel) == {4, 5, 6, 7}


def test_min_cut_examples(kernel):
    assert global_min_cut(C4, backend=kernel).value == 2
    assert global_min_cut(K4, backend=kernel).value == 3
    cut = global_min_cut(TWO_TRI_BRIDGE, backend=kernel)
    assert cut.value == 1 and cut.side in ({0, 1, 2}, {3, 4, 5})
    with pytest.raises(Disconnected):
        global_min_cut(build_graph(4, [(0, 1), (2, 3)]), backend=kernel)
    with pytest.raises(TooSmall):
        global_min_cut(build_graph(1, []), backend=kernel)


@given(graphs(min_n=2, max_n=10))
def test_min_cut_value_counts_crossing_edges(g):
    from csagent.graph import connected_component

    if len(connected_component(g, 0)) != g.n:
        return
    cut = global_min_cut(g)
    assert 1 <= len(cut.side) <= g.n - 1
    crossing = sum(1 for u, v in g.edges() if (u in cut.side) != (v in cut.side))
    assert crossing == cut.value
    # no single-vertex cut beats it
    assert cut.value <= min(g.degree(v) for v in range(g.n))


def test_query_must_exist():
    with pytest.raises(VertexNotInGraph):
        community(K4, 9, Metric(MetricKind.CORE, 2))


@pytest.mark.parametrize("kind, k", [("Truss", 2), ("Core", 1), ("Clique", 1), ("ECC", 0)])
def test_metric_rejects_small_k(kind, k):
    with pytest.raises(KTooSmall):
        Metric(kind, k)


def test_brute_force_examples():
    assert brute_force_community(TRIANGLE, 0, Metric("Core", 2)) == {0, 1, 2}
    empty = build_graph(5, [])
    for kind in MetricKind:
        k = 3 if kind is MetricKind.TRUSS else 2
        assert brute_force_community(empty, 0, Metric(kind, k)) == frozenset()
    with pytest.raises(GraphTooLarge):
        brute_force_community(build_graph(13, []), 0, Metric("Core", 2))


def test_truss_needs_spanning_edge_set():
    # two K4s sharing vertex 3 plus the chord 0-4: that chord sits in no triangle,
    # so the 4-truss deletes it even though both endpoints stay
    edges = [(u, v) for u in range(4) for v in range(u + 1, 4)]
    edges += [(u, v) for u in range(3, 7) for v in range(u + 1, 7)] + [(0, 4)]
    g = build_graph(7, edges)
    truth = k_truss_community(g, 0, 4)
    assert truth == set(range(7))
    assert satisfies(g, truth, MetricKind.TRUSS, 4)
    assert is_truss_edge_set_valid(g, truth, 4)


def _metrics():
    for kind in MetricKind:
        for k in ((3, 4) if kind is MetricKind.TRUSS else (2, 3, 4)):
            yield Metric(kind, k)


@settings(max_examples=150, deadline=None)
@given(graphs(max_n=9), st.data())
def test_fast_equals_brute_force(g, data):
    q = data.draw(st.integers(0, g.n - 1))
    for m in _metrics():
        assert community(g, q, m) == brute_force_community(g, q, m), m


@pytest.mark.parametrize("name", ["python", "cython"])
def test_backends_agree_on_random_graphs(name):
    from csagent import kernels

    if name not in kernels.BACKENDS:
        pytest.skip("compiled kernels not built")
    other = kernels.get_backend(name)
    ref = kernels.get_backend("python")
    rng = np.random.default_rng(11)
    for _ in range(150):
        n = int(rng.integers(2, 25))
        g = random_graph(rng, n, float(rng.uniform(0.1, 0.7)))
        q = int(rng.integers(n))
        for m in _metrics():
            assert community(g, q, m, backend=other) == community(g, q, m, backend=ref)


@settings(max_examples=120, deadline=None)
@given(graphs(max_n=25), st.data())
def test_outputs_satisfy_definitions(g, data):
    q = data.draw(st.integers(0, g.n - 1))
    for m in _metrics():
        out = community(g, q, m)
        if out:
            assert q in out and is_connected_set(g, out)
            assert satisfies(g, out, m.kind, m.k)


@settings(max_examples=100, deadline=None)
@given(graphs(max_n=20), st.data())
def test_containment_in_k(g, data):
    q = data.draw(st.integers(0, g.n - 1))
    for kind in (MetricKind.CORE, MetricKind.TRUSS, MetricKind.ECC):
        lo = 3 if kind is MetricKind.TRUSS else 2
        prev = None
        for k in range(lo, lo + 4):
            cur = community(g, q, Metric(kind, k))
            if prev is not None:
                assert cur <= prev
            prev = cur


@pytest.mark.parametrize("c", [3, 4, 5, 6])
def test_planted_clique_cross_metric(c):
    rng = np.random.default_rng(c)
    n = c + 4
    noise = random_graph(rng, n, 0.15)
    edges = set(noise.edges()) | {(u, v) for u in range(c) for v in range(u + 1, c)}
    g = build_graph(n, edges)
    clique = set(range(c))
    assert satisfies(g, clique, MetricKind.CORE, c - 1)
    assert satisfies(g, clique, MetricKind.TRUSS, c)
    assert satisfies(g, clique, MetricKind.ECC, c - 1)
    assert clique <= k_core_community(g, 0, c - 1)
    assert clique <= k_truss_community(g, 0, c)
    assert clique <= k_ecc_community(g, 0, c - 1)
