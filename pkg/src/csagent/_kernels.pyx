# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled oracle kernels; see ``_pykernels`` for the reference semantics."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int32_t i32


cdef inline Py_ssize_t _position(const i32[::1] indptr, const i32[::1] indices,
                                 i32 u, i32 v) noexcept nogil:
    cdef Py_ssize_t lo = indptr[u], hi = indptr[u + 1], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if indices[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


def core_alive(int n, indptr_, indices_, int k):
    cdef const i32[::1] indptr = np.ascontiguousarray(indptr_, dtype=np.int32)
    cdef const i32[::1] indices = np.ascontiguousarray(indices_, dtype=np.int32)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] alive_a = np.ones(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] alive = alive_a
    cdef i32[::1] deg = np.empty(n, dtype=np.int32)
    cdef i32[::1] queue = np.empty(n, dtype=np.int32)
    cdef Py_ssize_t head = 0, tail = 0, p
    cdef i32 v, w
    with nogil:
        for v in range(n):
            deg[v] = indptr[v + 1] - indptr[v]
            if deg[v] < k:
                alive[v] = 0
                queue[tail] = v
                tail += 1
        while head < tail:
            v = queue[head]
            head += 1
            for p in range(indptr[v], indptr[v + 1]):
                w = indices[p]
                if alive[w]:
                    deg[w] -= 1
                    if deg[w] < k:
                        alive[w] = 0
                        queue[tail] = w
                        tail += 1
    return alive_a.astype(bool)


def edge_ids(int n, indptr_, indices_):
    cdef const i32[::1] indptr = np.ascontiguousarray(indptr_, dtype=np.int32)
    cdef const i32[::1] indices = np.ascontiguousarray(indices_, dtype=np.int32)
    eid_a = np.full(indices.shape[0], -1, dtype=np.int32)
    cdef i32[::1] eid = eid_a
    cdef i32 m = 0, u, v
    cdef Py_ssize_t p
    with nogil:
        for u in range(n):
            for p in range(indptr[u], indptr[u + 1]):
                v = indices[p]
                if u < v:
                    eid[p] = m
                    m += 1
                else:
                    eid[p] = eid[_position(indptr, indices, v, u)]
    return eid_a, m


def truss_alive(int n, indptr_, indices_, int k):
    cdef const i32[::1] indptr = np.ascontiguousarray(indptr_, dtype=np.int32)
    cdef const i32[::1] indices = np.ascontiguousarray(indices_, dtype=np.int32)
    eid_a, m_obj = edge_ids(n, indptr, indices)
    cdef i32[::1] eid = eid_a
    cdef i32 m = m_obj
    cdef i32 need = k - 2
    cdef i32[:, ::1] ends = np.empty((max(m, 1), 4), dtype=np.int32)
    cdef cnp.uint8_t[::1] alive = np.ones(max(m, 1), dtype=np.uint8)
    cdef cnp.uint8_t[::1] queued = np.zeros(max(m, 1), dtype=np.uint8)
    cdef i32[::1] support = np.zeros(max(m, 1), dtype=np.int32)
    cdef i32[::1] queue = np.empty(max(m, 1), dtype=np.int32)
    out_a = np.zeros(indices.shape[0], dtype=np.uint8)
    cdef cnp.uint8_t[::1] out = out_a
    cdef Py_ssize_t head = 0, tail = 0, p, i, iend, j, jend
    cdef i32 u, v, e, e1, e2, a, b
    with nogil:
        for u in range(n):
            for p in range(indptr[u], indptr[u + 1]):
                v = indices[p]
                if u < v:
                    e = eid[p]
                    ends[e, 0] = u
                    ends[e, 1] = v
                    ends[e, 2] = <i32>p
                    ends[e, 3] = <i32>_position(indptr, indices, v, u)
        for e in range(m):
            u = ends[e, 0]
            v = ends[e, 1]
            i = indptr[u]; iend = indptr[u + 1]
            j = indptr[v]; jend = indptr[v + 1]
            while i < iend and j < jend:
                a = indices[i]; b = indices[j]
                if a < b:
                    i += 1
                elif b < a:
                    j += 1
                else:
                    support[e] += 1
                    i += 1
                    j += 1
            if support[e] < need:
                queued[e] = 1
                queue[tail] = e
                tail += 1
        while head < tail:
            e = queue[head]
            head += 1
            alive[e] = 0
            u = ends[e, 0]
            v = ends[e, 1]
            i = indptr[u]; iend = indptr[u + 1]
            j = indptr[v]; jend = indptr[v + 1]
            while i < iend and j < jend:
                a = indices[i]; b = indices[j]
                if a < b:
                    i += 1
                elif b < a:
                    j += 1
                else:
                    e1 = eid[i]; e2 = eid[j]
                    if alive[e1] and alive[e2]:
                        support[e1] -= 1
                        if support[e1] < need and not queued[e1]:
                            queued[e1] = 1
                            queue[tail] = e1
                            tail += 1
                        support[e2] -= 1
                        if support[e2] < need and not queued[e2]:
                            queued[e2] = 1
                            queue[tail] = e2
                            tail += 1
                    i += 1
                    j += 1
        for e in range(m):
            if alive[e]:
                out[ends[e, 2]] = 1
                out[ends[e, 3]] = 1
    return out_a.astype(bool)


def min_cut(int n, indptr_, indices_):
    cdef const i32[::1] indptr = np.ascontiguousarray(indptr_, dtype=np.int32)
    cdef const i32[::1] indices = np.ascontiguousarray(indices_, dtype=np.int32)
    cdef cnp.int64_t[:, ::1] w = np.zeros((n, n), dtype=np.int64)
    cdef cnp.int64_t[::1] key = np.zeros(n, dtype=np.int64)
    cdef cnp.uint8_t[::1] active = np.ones(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] in_a = np.zeros(n, dtype=np.uint8)
    # owner[v] = representative that absorbed v
    cdef i32[::1] owner = np.arange(n, dtype=np.int32)
    cdef i32[::1] best_owner = np.arange(n, dtype=np.int32)
    cdef cnp.int64_t best_value = -1, cut
    cdef i32 n_active = n, step, sel, prev, last, v, best_rep = -1
    cdef Py_ssize_t p
    with nogil:
        for v in range(n):
            for p in range(indptr[v], indptr[v + 1]):
                w[v, indices[p]] = 1
        while n_active > 1:
            for v in range(n):
                in_a[v] = 0
                key[v] = 0
            prev = -1
            last = -1
            for step in range(n_active):
                sel = -1
                for v in range(n):
                    if active[v] and not in_a[v] and (sel < 0 or key[v] > key[sel]):
                        sel = v
                in_a[sel] = 1
                prev = last
                last = sel
                for v in range(n):
                    if active[v] and not in_a[v]:
                        key[v] += w[sel, v]
            cut = key[last]
            if best_value < 0 or cut < best_value:
                best_value = cut
                best_rep = last
                for v in range(n):
                    best_owner[v] = owner[v]
            for v in range(n):
                if active[v]:
                    w[prev, v] += w[last, v]
                    w[v, prev] = w[prev, v]
            w[prev, prev] = 0
            for v in range(n):
                if owner[v] == last:
                    owner[v] = prev
            active[last] = 0
            n_active -= 1
    side = np.zeros(n, dtype=bool)
    for v in range(n):
        if best_owner[v] == best_rep:
            side[v] = True
    return int(best_value), side


cdef void _expand(const cnp.uint8_t[:, ::1] adj, i32[:, ::1] cand, i32 depth,
                  i32 ncand, i32[::1] r, i32 rlen, i32[::1] best,
                  i32* best_len) noexcept nogil:
    cdef i32 i, j, v, x, m
    for i in range(ncand):
        if rlen + ncand - i <= best_len[0]:
            return
        v = cand[depth, i]
        r[rlen] = v
        if rlen + 1 > best_len[0]:
            for j in range(rlen + 1):
                best[j] = r[j]
            best_len[0] = rlen + 1
        m = 0
        for j in range(i + 1, ncand):
            x = cand[depth, j]
            if adj[v, x]:
                cand[depth + 1, m] = x
                m += 1
        _expand(adj, cand, depth + 1, m, r, rlen + 1, best, best_len)


def max_clique(int n, indptr_, indices_, int q):
    cdef const i32[::1] indptr = np.ascontiguousarray(indptr_, dtype=np.int32)
    cdef const i32[::1] indices = np.ascontiguousarray(indices_, dtype=np.int32)
    cdef i32 d = indptr[q + 1] - indptr[q]
    nbrs_a = np.asarray(indices[indptr[q]:indptr[q + 1]]).copy()
    cdef i32[::1] nbrs = nbrs_a
    local_a = np.full(n, -1, dtype=np.int32)
    cdef i32[::1] local = local_a
    cdef cnp.uint8_t[:, ::1] adj = np.zeros((max(d, 1), max(d, 1)), dtype=np.uint8)
    cdef i32[:, ::1] cand = np.zeros((d + 2, max(d, 1)), dtype=np.int32)
    cdef i32[::1] r = np.zeros(max(d, 1), dtype=np.int32)
    cdef i32[::1] best = np.zeros(max(d, 1), dtype=np.int32)
    cdef i32 best_len = 0, i, j, v
    cdef Py_ssize_t p
    with nogil:
        for i in range(d):
            local[nbrs[i]] = i
        for i in range(d):
            v = nbrs[i]
            for p in range(indptr[v], indptr[v + 1]):
                j = local[indices[p]]
                if j >= 0:
                    adj[i, j] = 1
            cand[0, i] = i
        _expand(adj, cand, 0, d, r, 0, best, &best_len)
    out = [q] + [int(nbrs[best[i]]) for i in range(best_len)]
    return sorted(out)
