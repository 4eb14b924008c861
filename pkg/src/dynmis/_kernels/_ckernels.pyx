# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled graph kernels; same contracts and results as ``_pykernels``."""

import time

import numpy as np

from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy, memset

BACKEND = "cython"

cdef extern from *:
    int popcount64 "__builtin_popcountll"(unsigned long long) nogil
    int ctz64 "__builtin_ctzll"(unsigned long long) nogil

cdef long CLOCK_EVERY = 1024


cdef int _csr(tuple adj, int **indptr_out, int **indices_out) except -1:
    cdef Py_ssize_t n = len(adj)
    cdef Py_ssize_t v, total = 0
    cdef tuple row
    for v in range(n):
        total += len(<tuple>adj[v])
    cdef int *indptr = <int *>malloc((n + 1) * sizeof(int))
    cdef int *indices = <int *>malloc((total + 1) * sizeof(int))
    if indptr == NULL or indices == NULL:
        free(indptr)
        free(indices)
        raise MemoryError()
    cdef Py_ssize_t k = 0
    indptr[0] = 0
    for v in range(n):
        row = <tuple>adj[v]
        for u in row:
            indices[k] = <int>u
            k += 1
        indptr[v + 1] = <int>k
    indptr_out[0] = indptr
    indices_out[0] = indices
    return 0


def hop_distances(tuple adj, sources, int cutoff):
    cdef dict dist = {}
    cdef list frontier = [], nxt
    cdef int d = 0
    cdef tuple row
    for s in sources:
        if s not in dist:
            dist[s] = 0
            frontier.append(s)
    while frontier and d < cutoff:
        d += 1
        nxt = []
        for v in frontier:
            row = <tuple>adj[v]
            for u in row:
                if u not in dist:
                    dist[u] = d
                    nxt.append(u)
        frontier = nxt
    return dist


def neighborhood(tuple adj, nodes):
    cdef Py_ssize_t n = len(adj)
    cdef object nodes_arr = np.unique(np.fromiter(nodes, dtype=np.intp))
    cdef Py_ssize_t[::1] nv = nodes_arr
    cdef Py_ssize_t m = nv.shape[0], i, k = 0, total = 0, v
    cdef tuple row
    for i in range(m):
        v = nv[i]
        if v < 0 or v >= n:
            raise IndexError(f"node {v} out of range")
        total += len(<tuple>adj[v])
    cdef object raw = np.empty(m + total, dtype=np.intp)
    cdef Py_ssize_t[::1] rv = raw
    for i in range(m):
        v = nv[i]
        rv[k] = v
        k += 1
        row = <tuple>adj[v]
        for u in row:
            rv[k] = <Py_ssize_t>u
            k += 1
    cdef object local = np.unique(raw)
    cdef Py_ssize_t[::1] lv = local
    cdef Py_ssize_t[::1] where = np.empty(n, dtype=np.intp)
    for i in range(lv.shape[0]):
        where[lv[i]] = i
    cdef object indptr = np.empty(m + 1, dtype=np.intp)
    cdef object cols = np.empty(total, dtype=np.intp)
    cdef object pos = np.empty(m, dtype=np.intp)
    cdef Py_ssize_t[::1] ip = indptr, cv = cols, pv = pos
    k = 0
    ip[0] = 0
    for i in range(m):
        v = nv[i]
        pv[i] = where[v]
        row = <tuple>adj[v]
        for u in row:
            cv[k] = where[<Py_ssize_t>u]
            k += 1
        ip[i + 1] = k
    return nodes_arr, local, indptr, cols, pos


def is_independent(tuple adj, nodes):
    cdef Py_ssize_t n = len(adj), v
    cdef char[::1] mark = np.zeros(n, dtype=np.int8)
    cdef list members = [int(x) for x in nodes]
    cdef tuple row
    for x in members:
        v = x
        if v < 0 or v >= n:
            raise IndexError(f"node {v} out of range")
        mark[v] = 1
    for x in members:
        row = <tuple>adj[<Py_ssize_t>x]
        for u in row:
            if mark[<Py_ssize_t>u]:
                return False
    return True


def diameter(tuple adj):
    cdef int n = len(adj)
    if n == 0:
        return 0
    cdef int *indptr
    cdef int *indices
    _csr(adj, &indptr, &indices)
    cdef int *dist = <int *>malloc(n * sizeof(int))
    cdef int *queue = <int *>malloc(n * sizeof(int))
    cdef int best = 0, s, i, head, tail, v, u, k, ecc, dv
    try:
        if dist == NULL or queue == NULL:
            raise MemoryError()
        with nogil:
            for s in range(n):
                if indptr[s + 1] == indptr[s]:
                    continue
                for i in range(n):
                    dist[i] = -1
                dist[s] = 0
                queue[0] = s
                head = 0
                tail = 1
                ecc = 0
                while head < tail:
                    v = queue[head]
                    head += 1
                    dv = dist[v] + 1
                    for k in range(indptr[v], indptr[v + 1]):
                        u = indices[k]
                        if dist[u] < 0:
                            dist[u] = dv
                            ecc = dv
                            queue[tail] = u
                            tail += 1
                if ecc > best:
                    best = ecc
    finally:
        free(dist)
        free(queue)
        free(indptr)
        free(indices)
    return best


# Binary min-heap of int64 keys, lazily invalidated by the callers.
cdef inline void _heap_push(int64_t *heap, int *size, int64_t key) noexcept nogil:
    cdef int i = size[0]
    cdef int parent
    size[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if heap[parent] <= key:
            break
        heap[i] = heap[parent]
        i = parent
    heap[i] = key


cdef inline int64_t _heap_pop(int64_t *heap, int *size) noexcept nogil:
    cdef int64_t top = heap[0]
    cdef int64_t last
    cdef int i = 0, child, n
    size[0] -= 1
    n = size[0]
    if n == 0:
        return top
    last = heap[n]
    while True:
        child = 2 * i + 1
        if child >= n:
            break
        if child + 1 < n and heap[child + 1] < heap[child]:
            child += 1
        if last <= heap[child]:
            break
        heap[i] = heap[child]
        i = child
    heap[i] = last
    return top


cdef int _greedy(int n, int *indptr, int *indices, char *out) except -1:
    cdef int *deg = <int *>malloc((n + 1) * sizeof(int))
    cdef char *alive = <char *>malloc(n + 1)
    cdef int64_t *heap = <int64_t *>malloc((n + 1 + 2 * indptr[n]) * sizeof(int64_t))
    cdef int hsize = 0, v, u, w, k, j
    cdef int64_t key, stride = n
    if deg == NULL or alive == NULL or heap == NULL:
        free(deg)
        free(alive)
        free(heap)
        raise MemoryError()
    with nogil:
        for v in range(n):
            deg[v] = indptr[v + 1] - indptr[v]
            alive[v] = 1
            out[v] = 0
            _heap_push(heap, &hsize, <int64_t>deg[v] * stride + v)
        while hsize > 0:
            key = _heap_pop(heap, &hsize)
            v = <int>(key % stride)
            if not alive[v] or key // stride != deg[v]:
                continue
            out[v] = 1
            alive[v] = 0
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if alive[u]:
                    alive[u] = 0
                    for j in range(indptr[u], indptr[u + 1]):
                        w = indices[j]
                        if alive[w]:
                            deg[w] -= 1
                            _heap_push(heap, &hsize, <int64_t>deg[w] * stride + w)
    free(deg)
    free(alive)
    free(heap)
    return 0


def greedy_mis(tuple adj):
    cdef int n = len(adj)
    if n == 0:
        return []
    cdef int *indptr
    cdef int *indices
    _csr(adj, &indptr, &indices)
    cdef char *out = <char *>malloc(n)
    try:
        if out == NULL:
            raise MemoryError()
        _greedy(n, indptr, indices, out)
        return [v for v in range(n) if out[v]]
    finally:
        free(out)
        free(indptr)
        free(indices)


def round_estimates(tuple adj, double[::1] est):
    cdef int n = len(adj)
    if est.shape[0] != n:
        raise ValueError("estimate vector length does not match node count")
    if n == 0:
        return []
    cdef int *indptr
    cdef int *indices
    _csr(adj, &indptr, &indices)
    cdef char *cand = <char *>malloc(n)
    cdef int *cnt = <int *>malloc(n * sizeof(int))
    cdef int *viol = <int *>malloc(n * sizeof(int))
    cdef int nviol = 0, v, u, k, i, best_i, c, write
    try:
        if cand == NULL or cnt == NULL or viol == NULL:
            raise MemoryError()
        with nogil:
            for v in range(n):
                cand[v] = est[v] >= 0.5
            for v in range(n):
                cnt[v] = 0
                if cand[v]:
                    for k in range(indptr[v], indptr[v + 1]):
                        if cand[indices[k]]:
                            cnt[v] += 1
                    if cnt[v]:
                        viol[nviol] = v
                        nviol += 1
            while True:
                # compact, then pick (most violations, lowest estimate, largest id)
                write = 0
                best_i = -1
                for i in range(nviol):
                    v = viol[i]
                    if not cand[v] or cnt[v] == 0:
                        continue
                    viol[write] = v
                    if best_i < 0:
                        best_i = write
                    else:
                        u = viol[best_i]
                        if (cnt[v] > cnt[u]
                                or (cnt[v] == cnt[u] and est[v] < est[u])
                                or (cnt[v] == cnt[u] and est[v] == est[u] and v > u)):
                            best_i = write
                    write += 1
                nviol = write
                if best_i < 0:
                    break
                v = viol[best_i]
                cand[v] = 0
                for k in range(indptr[v], indptr[v + 1]):
                    u = indices[k]
                    if cand[u]:
                        cnt[u] -= 1
        return [v for v in range(n) if cand[v]]
    finally:
        free(cand)
        free(cnt)
        free(viol)
        free(indptr)
        free(indices)


def exact_mis(tuple adj, time_limit=None):
    cdef int n = len(adj)
    if n == 0:
        return [], True
    cdef int W = (n + 63) >> 6
    cdef uint64_t *nbr = <uint64_t *>malloc(n * W * sizeof(uint64_t))
    # frame layout: rem[W] | chosen[W]; sizes kept separately
    cdef int cap = n + 2
    cdef uint64_t *frames = <uint64_t *>malloc(cap * 2 * W * sizeof(uint64_t))
    cdef int *sizes = <int *>malloc(cap * sizeof(int))
    cdef uint64_t *best = <uint64_t *>malloc(W * sizeof(uint64_t))
    cdef uint64_t *rem = <uint64_t *>malloc(W * sizeof(uint64_t))
    cdef uint64_t *chosen = <uint64_t *>malloc(W * sizeof(uint64_t))
    cdef uint64_t *cliques = <uint64_t *>malloc(n * W * sizeof(uint64_t))
    cdef uint64_t *top
    cdef uint64_t word, bit, isolated_any
    cdef int v, u, w, d, maxd, maxv, leaf, size, best_size = 0, sp, ncl, j, rcount
    cdef long popped = 0
    cdef bint timed_out = False, found
    cdef double deadline = 0.0
    cdef bint has_deadline = time_limit is not None and time_limit != float("inf")

    try:
        if (nbr == NULL or frames == NULL or sizes == NULL or best == NULL
                or rem == NULL or chosen == NULL or cliques == NULL):
            raise MemoryError()
        memset(nbr, 0, n * W * sizeof(uint64_t))
        for v in range(n):
            for u in <tuple>adj[v]:
                nbr[v * W + (<int>u >> 6)] |= (<uint64_t>1) << (<int>u & 63)
        memset(best, 0, W * sizeof(uint64_t))
        for v in greedy_mis(adj):
            best[<int>v >> 6] |= (<uint64_t>1) << (<int>v & 63)
            best_size += 1
        if has_deadline:
            deadline = time.monotonic() + time_limit

        # root frame: all vertices, nothing chosen
        sp = 0
        top = frames
        memset(top, 0, 2 * W * sizeof(uint64_t))
        for v in range(n):
            top[v >> 6] |= (<uint64_t>1) << (v & 63)
        sizes[0] = 0
        sp = 1

        while sp > 0:
            popped += 1
            if has_deadline and popped % CLOCK_EVERY == 0:
                if time.monotonic() > deadline:
                    timed_out = True
                    break
            sp -= 1
            top = frames + sp * 2 * W
            memcpy(rem, top, W * sizeof(uint64_t))
            memcpy(chosen, top + W, W * sizeof(uint64_t))
            size = sizes[sp]

            with nogil:
                while True:
                    maxd = -1
                    maxv = -1
                    leaf = -1
                    isolated_any = 0
                    rcount = 0
                    for j in range(W):
                        word = rem[j]
                        while word:
                            v = (j << 6) + ctz64(word)
                            word &= word - 1
                            rcount += 1
                            d = 0
                            for w in range(W):
                                d += popcount64(nbr[v * W + w] & rem[w])
                            if d == 0:
                                # safe to take now: no residual neighbors
                                isolated_any = 1
                                bit = (<uint64_t>1) << (v & 63)
                                chosen[v >> 6] |= bit
                                size += 1
                            elif d == 1:
                                if leaf < 0:
                                    leaf = v
                            elif d > maxd:
                                maxd = d
                                maxv = v
                    if isolated_any:
                        for w in range(W):
                            rem[w] &= ~chosen[w]
                        continue
                    if leaf >= 0:
                        for w in range(W):
                            rem[w] &= ~nbr[leaf * W + w]
                        bit = (<uint64_t>1) << (leaf & 63)
                        rem[leaf >> 6] &= ~bit
                        chosen[leaf >> 6] |= bit
                        size += 1
                        continue
                    break

            if rcount == 0 or maxv < 0:
                if size > best_size:
                    best_size = size
                    memcpy(best, chosen, W * sizeof(uint64_t))
                continue
            if size + rcount <= best_size:
                continue

            with nogil:
                ncl = 0
                for j in range(W):
                    word = rem[j]
                    while word:
                        v = (j << 6) + ctz64(word)
                        word &= word - 1
                        found = False
                        for u in range(ncl):
                            if (cliques[u * W + (v >> 6)] >> (v & 63)) & 1:
                                for w in range(W):
                                    cliques[u * W + w] &= nbr[v * W + w]
                                found = True
                                break
                        if not found:
                            memcpy(cliques + ncl * W, nbr + v * W, W * sizeof(uint64_t))
                            ncl += 1
            if size + ncl <= best_size:
                continue

            bit = (<uint64_t>1) << (maxv & 63)
            # exclude branch (explored second)
            top = frames + sp * 2 * W
            memcpy(top, rem, W * sizeof(uint64_t))
            top[maxv >> 6] &= ~bit
            memcpy(top + W, chosen, W * sizeof(uint64_t))
            sizes[sp] = size
            sp += 1
            # include branch (explored first)
            top = frames + sp * 2 * W
            for w in range(W):
                top[w] = rem[w] & ~nbr[maxv * W + w]
            top[maxv >> 6] &= ~bit
            memcpy(top + W, chosen, W * sizeof(uint64_t))
            top[W + (maxv >> 6)] |= bit
            sizes[sp] = size + 1
            sp += 1

        members = []
        for v in range(n):
            if (best[v >> 6] >> (v & 63)) & 1:
                members.append(v)
        return members, not timed_out
    finally:
        free(nbr)
        free(frames)
        free(sizes)
        free(best)
        free(rem)
        free(chosen)
        free(cliques)
