"""Pure-Python versions of the oracle kernels.

Every function here has a twin with the same signature and the same
deterministic output in ``_kernels.pyx``. Inputs are CSR arrays
(``indptr``, ``indices``) with sorted neighbor runs.
"""
from bisect import bisect_left
from collections import deque


def _lists(indptr, indices):
    return [int(x) for x in indptr], [int(x) for x in indices]


def core_alive(n, indptr, indices, k):
    """Mask of the vertices that survive peeling all degrees below ``k``."""
    indptr, indices = _lists(indptr, indices)
    deg = [indptr[v + 1] - indptr[v] for v in range(n)]
    alive = [True] * n
    todo = deque(v for v in range(n) if deg[v] < k)
    for v in todo:
        alive[v] = False
    while todo:
        v = todo.popleft()
        for p in range(indptr[v], indptr[v + 1]):
            w = indices[p]
            if alive[w]:
                deg[w] -= 1
                if deg[w] < k:
                    alive[w] = False
                    todo.append(w)
    return alive


def _position(indptr, indices, u, v):
    p = bisect_left(indices, v, indptr[u], indptr[u + 1])
    return p


def edge_ids(n, indptr, indices):
    """Undirected edge id for every CSR slot, numbered in ``(u, v), u < v`` order."""
    eid = [-1] * len(indices)
    m = 0
    for u in range(n):
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            if u < v:
                eid[p] = m
                m += 1
            else:
                eid[p] = eid[_position(indptr, indices, v, u)]
    return eid, m


def truss_alive(n, indptr, indices, k):
    """Mask over CSR slots of the edges in the maximal ``k``-truss."""
    indptr, indices = _lists(indptr, indices)
    eid, m = edge_ids(n, indptr, indices)
    need = k - 2
    ends = [None] * m
    for u in range(n):
        for p in range(indptr[u], indptr[u + 1]):
            if u < indices[p]:
                ends[eid[p]] = (u, indices[p], p, _position(indptr, indices, indices[p], u))
    alive_e = [True] * m
    support = [0] * m
    for e, (u, v, _, _) in enumerate(ends):
        support[e] = _common(indptr, indices, eid, alive_e, u, v, None)
    todo = deque(e for e in range(m) if support[e] < need)
    queued = [False] * m
    for e in todo:
        queued[e] = True
    while todo:
        e = todo.popleft()
        u, v, _, _ = ends[e]
        alive_e[e] = False

        def hit(f):
            support[f] -= 1
            if support[f] < need and not queued[f]:
                queued[f] = True
                todo.append(f)

        _common(indptr, indices, eid, alive_e, u, v, hit)
    out = [False] * len(indices)
    for e, (_, _, p, q) in enumerate(ends):
        if alive_e[e]:
            out[p] = out[q] = True
    return out


def _common(indptr, indices, eid, alive_e, u, v, hit):
    """Count (and optionally visit) alive triangles over the pair ``u, v``."""
    i, iend = indptr[u], indptr[u + 1]
    j, jend = indptr[v], indptr[v + 1]
    count = 0
    while i < iend and j < jend:
        a, b = indices[i], indices[j]
        if a < b:
            i += 1
        elif b < a:
            j += 1
        else:
            e1, e2 = eid[i], eid[j]
            if alive_e[e1] and alive_e[e2]:
                count += 1
                if hit is not None:
                    hit(e1)
                    hit(e2)
            i += 1
            j += 1
    return count


def min_cut(n, indptr, indices):
    """Stoer-Wagner global minimum cut on an unweighted graph with ``n >= 2``.

    Phases start from the lowest surviving id and break max-adjacency ties
    towards the lowest id, so the result is fully deterministic. Returns
    ``(value, side)`` with ``side`` a boolean mask of one shore.
    """
    indptr, indices = _lists(indptr, indices)
    w = [[0] * n for _ in range(n)]
    for u in range(n):
        for p in range(indptr[u], indptr[u + 1]):
            w[u][indices[p]] = 1
    members = [[v] for v in range(n)]
    active = list(range(n))
    best_value = None
    best_side = None
    while len(active) > 1:
        in_a = {v: False for v in active}
        key = {v: 0 for v in active}
        prev = last = -1
        for _ in range(len(active)):
            sel = -1
            for v in active:
                if not in_a[v] and (sel < 0 or key[v] > key[sel]):
                    sel = v
            in_a[sel] = True
            prev, last = last, sel
            for v in active:
                if not in_a[v]:
                    key[v] += w[sel][v]
        cut = key[last]
        if best_value is None or cut < best_value:
            best_value = cut
            best_side = list(members[last])
        # merge last into prev
        for v in active:
            w[prev][v] += w[last][v]
            w[v][prev] = w[prev][v]
        w[prev][prev] = 0
        members[prev].extend(members[last])
        active.remove(last)
    side = [False] * n
    for v in best_side:
        side[v] = True
    return best_value, side


def max_clique(n, indptr, indices, q):
    """Lexicographically smallest maximum clique containing ``q`` (sorted)."""
    indptr, indices = _lists(indptr, indices)
    nbrs = indices[indptr[q]:indptr[q + 1]]
    local = {v: i for i, v in enumerate(nbrs)}
    adj = [set() for _ in nbrs]
    for i, v in enumerate(nbrs):
        for p in range(indptr[v], indptr[v + 1]):
            j = local.get(indices[p])
            if j is not None:
                adj[i].add(j)
    best = []

    def expand(r, cand):
        nonlocal best
        for i, v in enumerate(cand):
            if len(r) + len(cand) - i <= len(best):
                return
            r.append(v)
            if len(r) > len(best):
                best = list(r)
            expand(r, [x for x in cand[i + 1:] if x in adj[v]])
            r.pop()

    expand([], list(range(len(nbrs))))
    return sorted([q] + [nbrs[i] for i in best])
