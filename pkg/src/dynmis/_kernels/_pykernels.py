"""Pure-Python graph kernels.

Every function takes the adjacency as a tuple of sorted neighbor tuples
(the layout held by :class:`dynmis.dyngraph.Snapshot`). The compiled
module ``_ckernels`` implements the same functions with the same results;
this module is the fallback when the extension is not built.
"""

from __future__ import annotations

import heapq
import time
from collections import deque

import numpy as np

BACKEND = "python"

_CLOCK_EVERY = 1024


def hop_distances(adj, sources, cutoff):
    """BFS distances from ``sources`` up to ``cutoff`` hops."""
    dist = {}
    frontier = []
    for s in sources:
        if s not in dist:
            dist[s] = 0
            frontier.append(s)
    d = 0
    while frontier and d < cutoff:
        d += 1
        nxt = []
        for v in frontier:
            for u in adj[v]:
                if u not in dist:
                    dist[u] = d
                    nxt.append(u)
        frontier = nxt
    return dist


def neighborhood(adj, nodes):
    """Index arrays for aggregating over the neighbors of ``nodes``.

    Returns ``(nodes, local, indptr, cols, pos)``: ``nodes`` sorted and
    unique, ``local`` = nodes plus their neighbors (sorted), a CSR row per
    node whose ``cols`` index into ``local``, and each node's position in
    ``local``.
    """
    nodes = sorted(set(int(v) for v in nodes))
    members = set(nodes)
    for v in nodes:
        members.update(adj[v])
    local = sorted(members)
    index = {v: i for i, v in enumerate(local)}
    indptr = [0]
    cols = []
    for v in nodes:
        cols.extend(index[u] for u in adj[v])
        indptr.append(len(cols))
    return (
        np.array(nodes, dtype=np.intp),
        np.array(local, dtype=np.intp),
        np.array(indptr, dtype=np.intp),
        np.array(cols, dtype=np.intp),
        np.array([index[v] for v in nodes], dtype=np.intp),
    )


def is_independent(adj, nodes):
    members = set(nodes)
    return not any(u in members for v in members for u in adj[v])


def diameter(adj):
    n = len(adj)
    best = 0
    dist = [-1] * n
    for s in range(n):
        if not adj[s]:
            continue
        for i in range(n):
            dist[i] = -1
        dist[s] = 0
        q = deque([s])
        ecc = 0
        while q:
            v = q.popleft()
            dv = dist[v] + 1
            for u in adj[v]:
                if dist[u] < 0:
                    dist[u] = dv
                    ecc = dv
                    q.append(u)
        if ecc > best:
            best = ecc
    return best


def greedy_mis(adj):
    """Min-degree greedy; ties go to the smaller node id."""
    n = len(adj)
    deg = [len(a) for a in adj]
    alive = [True] * n
    heap = [(deg[v], v) for v in range(n)]
    heapq.heapify(heap)
    chosen = []
    while heap:
        d, v = heapq.heappop(heap)
        if not alive[v] or d != deg[v]:
            continue
        chosen.append(v)
        alive[v] = False
        for u in adj[v]:
            if alive[u]:
                alive[u] = False
                for w in adj[u]:
                    if alive[w]:
                        deg[w] -= 1
                        heapq.heappush(heap, (deg[w], w))
    chosen.sort()
    return chosen


def round_estimates(adj, est):
    """Threshold at 0.5, then drop violators until independent.

    The node with the most in-candidate neighbors goes first; ties remove
    the lower estimate, then the larger id.
    """
    n = len(adj)
    cand = [float(est[v]) >= 0.5 for v in range(n)]
    cnt = [0] * n
    heap = []
    for v in range(n):
        if cand[v]:
            c = 0
            for u in adj[v]:
                if cand[u]:
                    c += 1
            cnt[v] = c
            if c:
                heap.append((-c, float(est[v]), -v))
    heapq.heapify(heap)
    while heap:
        negc, p, negv = heapq.heappop(heap)
        v = -negv
        if not cand[v] or cnt[v] != -negc:
            continue
        cand[v] = False
        for u in adj[v]:
            if cand[u]:
                cnt[u] -= 1
                if cnt[u]:
                    heapq.heappush(heap, (-cnt[u], float(est[u]), -u))
    return [v for v in range(n) if cand[v]]


def _bits(mask):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def exact_mis(adj, time_limit=None):
    """Branch and bound for a maximum independent set.

    Returns ``(members, proven_optimal)``. Vertices of residual degree 0 or
    1 are taken without branching; otherwise the max-degree vertex (smallest
    id on ties) is branched on, include first. Subproblems are pruned by the
    residual vertex count and by a greedy clique cover.
    """
    n = len(adj)
    nbr = [0] * n
    for v in range(n):
        m = 0
        for u in adj[v]:
            m |= 1 << u
        nbr[v] = m

    best_mask = 0
    for v in greedy_mis(adj):
        best_mask |= 1 << v
    best_size = best_mask.bit_count()

    deadline = None
    if time_limit is not None and time_limit != float("inf"):
        deadline = time.monotonic() + time_limit

    stack = [((1 << n) - 1, 0, 0)]
    popped = 0
    timed_out = False
    while stack:
        popped += 1
        if deadline is not None and popped % _CLOCK_EVERY == 0 and time.monotonic() > deadline:
            timed_out = True
            break
        rem, chosen, size = stack.pop()

        while rem:
            maxd = -1
            maxv = -1
            leaf = -1
            isolated = 0
            for v in _bits(rem):
                d = (nbr[v] & rem).bit_count()
                if d == 0:
                    isolated |= 1 << v
                elif d == 1:
                    if leaf < 0:
                        leaf = v
                elif d > maxd:
                    maxd = d
                    maxv = v
            if isolated:
                rem &= ~isolated
                chosen |= isolated
                size += isolated.bit_count()
                continue
            if leaf >= 0:
                rem &= ~(nbr[leaf] | (1 << leaf))
                chosen |= 1 << leaf
                size += 1
                continue
            break

        if not rem:
            if size > best_size:
                best_size = size
                best_mask = chosen
            continue
        if size + rem.bit_count() <= best_size:
            continue
        cliques = []
        for v in _bits(rem):
            for j, common in enumerate(cliques):
                if common >> v & 1:
                    cliques[j] = common & nbr[v]
                    break
            else:
                cliques.append(nbr[v])
        if size + len(cliques) <= best_size:
            continue
        bit = 1 << maxv
        stack.append((rem & ~bit, chosen, size))
        stack.append((rem & ~(nbr[maxv] | bit), chosen | bit, size + 1))

    return list(_bits(best_mask)), not timed_out
