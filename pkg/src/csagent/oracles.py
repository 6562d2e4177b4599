"""Exact ground-truth communities for the four cohesive metrics.

All functions are pure. An empty frozenset means that no community of the
requested metric and ``k`` contains the query vertex.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from . import kernels
from .errors import Disconnected, KTooSmall, TooSmall
from .graph import Graph, MetricKind, connected_component, induced_subgraph, min_k


@dataclass(frozen=True)
class Metric:
    kind: MetricKind
    k: int

    def __post_init__(self):
        object.__setattr__(self, "kind", MetricKind(self.kind))
        if self.k < min_k(self.kind):
            raise KTooSmall(f"{self.kind.value} needs k >= {min_k(self.kind)}, got {self.k}")


@dataclass(frozen=True)
class CutResult:
    value: int
    side: frozenset


def _component_in_mask(g: Graph, q: int, keep) -> frozenset:
    seen = {q}
    todo = deque([q])
    while todo:
        u = todo.popleft()
        for w in g.adj[u]:
            if keep[w] and w not in seen:
                seen.add(w)
                todo.append(w)
    return frozenset(seen)


def k_core_community(g: Graph, q: int, k: int, *, backend=None) -> frozenset:
    g.check_vertex(q)
    impl = backend or kernels
    alive = impl.core_alive(g.n, *g.csr, k)
    if not alive[q]:
        return frozenset()
    return _component_in_mask(g, q, alive)


def k_truss_community(g: Graph, q: int, k: int, *, backend=None) -> frozenset:
    g.check_vertex(q)
    if k < 3:
        raise KTooSmall(f"k-truss needs k >= 3, got {k}")
    impl = backend or kernels
    indptr, indices = g.csr
    alive = impl.truss_alive(g.n, indptr, indices, k)
    seen = {q}
    todo = deque([q])
    while todo:
        u = todo.popleft()
        for p in range(indptr[u], indptr[u + 1]):
            w = int(indices[p])
            if alive[p] and w not in seen:
                seen.add(w)
                todo.append(w)
    return frozenset(seen) if len(seen) > 1 else frozenset()


def k_clique_community(g: Graph, q: int, k: int, *, backend=None) -> frozenset:
    g.check_vertex(q)
    if k < 2:
        raise KTooSmall(f"k-clique needs k >= 2, got {k}")
    impl = backend or kernels
    clique = impl.max_clique(g.n, *g.csr, q)
    return frozenset(clique) if len(clique) >= k else frozenset()


def global_min_cut(g: Graph, *, backend=None) -> CutResult:
    if g.n < 2:
        raise TooSmall("minimum cut needs at least two vertices")
    if len(connected_component(g, 0)) != g.n:
        raise Disconnected("minimum cut is only defined for connected graphs")
    impl = backend or kernels
    value, side = impl.min_cut(g.n, *g.csr)
    return CutResult(int(value), frozenset(v for v in range(g.n) if side[v]))


def k_ecc_community(g: Graph, q: int, k: int, *, backend=None) -> frozenset:
    g.check_vertex(q)
    current = connected_component(g, q)
    while len(current) >= 2:
        sub, remap = induced_subgraph(g, current)
        cut = global_min_cut(sub, backend=backend)
        if cut.value >= k:
            return current
        local_q = remap.index(q)
        shore = cut.side if local_q in cut.side else frozenset(range(sub.n)) - cut.side
        keep = [False] * g.n
        for i in shore:
            keep[remap[i]] = True
        current = _component_in_mask(g, q, keep)
    return frozenset()


_DISPATCH = {
    MetricKind.CORE: k_core_community,
    MetricKind.TRUSS: k_truss_community,
    MetricKind.CLIQUE: k_clique_community,
    MetricKind.ECC: k_ecc_community,
}


def community(g: Graph, q: int, metric: Metric, *, backend=None) -> frozenset:
    """Ground-truth community of ``q`` under ``metric``."""
    return _DISPATCH[metric.kind](g, q, metric.k, backend=backend)
