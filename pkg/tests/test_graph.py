import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csagent.errors import EndpointOutOfRange, MalformedRecord, SelfLoop, VertexNotInGraph
from csagent.graph import (
    DatasetKind,
    Difficulty,
    MetricKind,
    TaskInstance,
    build_graph,
    connected_component,
    induced_subgraph,
    instance_from_dict,
    instance_to_dict,
    read_dataset,
    read_instance,
    write_dataset,
    write_instance,
)

from conftest import K4, TRIANGLE, graphs, random_graph


def test_build_triangle():
    assert TRIANGLE.num_edges == 3
    assert [TRIANGLE.degree(v) for v in range(3)] == [2, 2, 2]


def test_build_empty_and_dedup():
    g = build_graph(2, [])
    assert g.num_edges == 0 and g.adj == ((), ())
    assert build_graph(4, [(0, 1), (0, 1), (1, 2), (1, 0)]).num_edges == 2


@pytest.mark.parametrize("edges, exc", [([(0, 3)], EndpointOutOfRange), ([(-1, 0)], EndpointOutOfRange),
                                        ([(1, 1)], SelfLoop)])
def test_build_rejects(edges, exc):
    with pytest.raises(exc):
        build_graph(3, edges)


@given(graphs(max_n=12))
def test_adjacency_symmetric_sorted(g):
    for v, nbrs in enumerate(g.adj):
        assert list(nbrs) == sorted(set(nbrs))
        assert v not in nbrs
        for w in nbrs:
            assert 0 <= w < g.n and v in g.adj[w]


def test_induced_subgraph_examples():
    sub, remap = induced_subgraph(K4, {0, 1, 2})
    assert sub.num_edges == 3 and remap == (0, 1, 2)
    empty, remap = induced_subgraph(K4, set())
    assert empty.n == 0 and remap == ()
    path = build_graph(4, [(0, 1), (1, 2), (2, 3)])
    sub, _ = induced_subgraph(path, {0, 2})
    assert sub.n == 2 and sub.num_edges == 0
    with pytest.raises(VertexNotInGraph):
        induced_subgraph(K4, {7})


@given(graphs(max_n=10), st.data())
def test_induced_subgraph_keeps_exact_edges(g, data):
    s = data.draw(st.sets(st.integers(0, g.n - 1)))
    sub, remap = induced_subgraph(g, s)
    got = {tuple(sorted((remap[u], remap[v]))) for u, v in sub.edges()}
    want = {(u, v) for u, v in g.edges() if u in s and v in s}
    assert got == want


def test_connected_component_examples():
    two = build_graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    assert connected_component(two, 4) == {3, 4, 5}
    assert connected_component(K4, 2) == {0, 1, 2, 3}
    assert connected_component(build_graph(3, [(0, 1)]), 2) == {2}
    with pytest.raises(VertexNotInGraph):
        connected_component(K4, 4)


@given(graphs(max_n=12))
def test_components_partition(g):
    comps = [connected_component(g, v) for v in range(g.n)]
    for a in comps:
        for b in comps:
            assert a == b or not (a & b)


def _triangle_instance():
    # two isolated vertices pad the triangle into the smallest PSG tier
    g = build_graph(5, TRIANGLE.edges())
    return TaskInstance(g, MetricKind.CORE, 2, 0, frozenset({0, 1, 2}),
                        Difficulty.EASY, DatasetKind.PSG, "tri", 1)


def test_record_roundtrip_triangle():
    line = write_instance(_triangle_instance())
    assert line == (
        '{"instance_id": "tri", "dataset": "PSG", "difficulty": "Easy", "metric": "Core", "k": 2, '
        '"query": 0, "n": 5, "adjacency": {"0": [1, 2], "1": [0, 2], "2": [0, 1], "3": [], "4": []}, '
        '"ground_truth": [0, 1, 2], "seed": 1}'
    )
    assert write_instance(read_instance(line)) == line


def test_record_rejects_query_outside_truth():
    d = instance_to_dict(_triangle_instance())
    d["query"] = 0
    d["ground_truth"] = [1, 2]
    with pytest.raises(MalformedRecord):
        instance_from_dict(d)


def test_record_rejects_tier_mismatch():
    d = instance_to_dict(_triangle_instance())
    d["difficulty"] = "Hard"
    with pytest.raises(MalformedRecord):
        read_instance(json.dumps(d))


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("seed"),
    lambda d: d.update(metric="Star"),
    lambda d: d.update(adjacency={"0": [1], "1": [], "2": [], "3": [], "4": []}),
    lambda d: d.update(ground_truth=[0, 5]),
])
def test_record_rejects_malformed(mutate):
    d = instance_to_dict(_triangle_instance())
    mutate(d)
    with pytest.raises(MalformedRecord):
        instance_from_dict(d)


def test_read_instance_rejects_garbage():
    with pytest.raises(MalformedRecord):
        read_instance("not json")


def test_roundtrip_many(tmp_path):
    from csagent.generators import DatasetSpec, build_dataset

    instances, _ = build_dataset(DatasetSpec("PSG", {"Easy": 10, "Medium": 5}, base_seed=3))
    path = tmp_path / "d.jsonl"
    write_dataset(path, instances)
    again = read_dataset(path)
    assert again == instances
    assert [write_instance(i) for i in again] == path.read_text().splitlines()


def test_csr_matches_adjacency():
    g = random_graph(np.random.default_rng(0), 9, 0.4)
    indptr, indices = g.csr
    for v in range(g.n):
        assert tuple(indices[indptr[v]:indptr[v + 1]].tolist()) == g.adj[v]
