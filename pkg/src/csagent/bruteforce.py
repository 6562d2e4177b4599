"""Exhaustive reference oracle and direct checks of the metric definitions.

Nothing here calls into the fast oracles or the kernels: vertex sets are
bitmasks, edge connectivity comes from unit-capacity augmenting paths and the
truss condition is re-derived by a naive simultaneous-deletion fixed point.
"""
from __future__ import annotations

from collections import deque
from itertools import combinations

from .errors import GraphTooLarge
from .graph import Graph, MetricKind

MAX_BRUTE_FORCE_N = 12


def _masks(g: Graph) -> list[int]:
    return [sum(1 << w for w in nbrs) for nbrs in g.adj]


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _connected(adj: list[int], s: int) -> bool:
    if not s:
        return False
    start = s & -s
    seen = start
    frontier = start
    while frontier:
        nxt = 0
        for v in _bits(frontier):
            nxt |= adj[v]
        frontier = nxt & s & ~seen
        seen |= frontier
    return seen == s


def _min_degree_ok(adj: list[int], s: int, k: int) -> bool:
    return all((adj[v] & s).bit_count() >= k for v in _bits(s))


def _truss_edges(adj: list[int], s: int, k: int) -> list[int]:
    """Adjacency masks of the maximal k-truss edge set inside ``s``."""
    live = [adj[v] & s if (s >> v) & 1 else 0 for v in range(len(adj))]
    while True:
        doomed = [
            (u, v)
            for u in _bits(s)
            for v in _bits(live[u])
            if u < v and (live[u] & live[v]).bit_count() < k - 2
        ]
        if not doomed:
            return live
        for u, v in doomed:
            live[u] &= ~(1 << v)
            live[v] &= ~(1 << u)


def _max_flow_at_least(adj: list[int], s: int, src: int, dst: int, k: int) -> bool:
    """Unit-capacity max flow from src to dst inside ``s`` reaches ``k``?"""
    used: set[tuple[int, int]] = set()
    flow = 0
    while flow < k:
        parent = {src: None}
        todo = deque([src])
        while todo and dst not in parent:
            u = todo.popleft()
            for w in _bits(adj[u] & s):
                # residual capacity is 1 - f(u,w) + f(w,u)
                if w in parent:
                    continue
                if (u, w) in used and (w, u) not in used:
                    continue
                parent[w] = u
                todo.append(w)
        if dst not in parent:
            return False
        w = dst
        while parent[w] is not None:
            u = parent[w]
            if (w, u) in used:
                used.discard((w, u))
            else:
                used.add((u, w))
            w = u
        flow += 1
    return True


def _edge_connectivity_at_least(adj: list[int], s: int, k: int) -> bool:
    members = list(_bits(s))
    if len(members) < 2 or not _connected(adj, s):
        return False
    src = members[0]
    return all(_max_flow_at_least(adj, s, src, t, k) for t in members[1:])


def _qualifies(adj: list[int], s: int, kind: MetricKind, k: int) -> bool:
    if kind is MetricKind.CORE:
        return _min_degree_ok(adj, s, k) and _connected(adj, s)
    if kind is MetricKind.CLIQUE:
        size = s.bit_count()
        return size >= k and all((adj[v] & s).bit_count() == size - 1 for v in _bits(s))
    if kind is MetricKind.TRUSS:
        if s.bit_count() < 2 or not _min_degree_ok(adj, s, k - 1):
            return False
        live = _truss_edges(adj, s, k)
        if any(live[v] == 0 for v in _bits(s)):
            return False
        return _connected(live, s)
    if kind is MetricKind.ECC:
        return _min_degree_ok(adj, s, k) and _edge_connectivity_at_least(adj, s, k)
    raise ValueError(kind)


def satisfies(g: Graph, members, kind: MetricKind, k: int) -> bool:
    """Check the metric's defining condition on the subgraph induced by ``members``.

    Core: connected, every internal degree >= k. Truss: the maximal set of
    internal edges each lying in >= k-2 triangles of that set spans
    ``members`` and is connected. Clique: >= k pairwise-adjacent vertices.
    ECC: at least two vertices and still connected after deleting any k-1
    internal edges.
    """
    kind = MetricKind(kind)
    s = 0
    for v in members:
        g.check_vertex(v)
        s |= 1 << v
    return _qualifies(_masks(g), s, kind, k)


def brute_force_community(g: Graph, q: int, metric) -> frozenset:
    """Largest qualifying connected vertex set containing ``q``.

    Sizes are scanned from largest to smallest and, within a size, subsets in
    lexicographic order, so ties resolve to the lexicographically smallest set.
    """
    if g.n > MAX_BRUTE_FORCE_N:
        raise GraphTooLarge(f"brute force is limited to n <= {MAX_BRUTE_FORCE_N}, got {g.n}")
    g.check_vertex(q)
    kind, k = MetricKind(metric.kind), metric.k
    adj = _masks(g)
    others = [v for v in range(g.n) if v != q]
    for size in range(len(others), -1, -1):
        for combo in combinations(others, size):
            s = 1 << q
            for v in combo:
                s |= 1 << v
            if _qualifies(adj, s, kind, k):
                return frozenset(_bits(s))
    return frozenset()


def is_truss_edge_set_valid(g: Graph, members, k: int) -> bool:
    """Direct re-check: every surviving internal edge sits in >= k-2 surviving triangles."""
    s = 0
    for v in members:
        s |= 1 << v
    adj = _masks(g)
    live = _truss_edges(adj, s, k)
    for u in _bits(s):
        for v in _bits(live[u]):
            if sum(1 for w in _bits(s) if (live[u] >> w) & 1 and (live[v] >> w) & 1) < k - 2:
                return False
    return True
