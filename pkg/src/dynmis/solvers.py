"""Classical MaxIS comparators.

* :func:`exact_maxis` -- branch and bound, the approximation-ratio reference.
* :func:`greedy_maxis` -- minimum-degree greedy (Greedy-MaxIS).
* :class:`UpdateState` -- incremental maximal-IS maintenance over edge events
  (our stand-in for the rule-based Update-Algo comparator; its rules are
  our own, see :meth:`UpdateState.step`).
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass
from typing import Iterable

from . import _kernels
from .dyngraph import EdgeEvent, EventError, Snapshot

IndependentSet = frozenset


class IllegalEvent(EventError):
    pass


@dataclass(frozen=True)
class ExactResult:
    members: frozenset
    proven_optimal: bool
    elapsed: float

    @property
    def size(self) -> int:
        return len(self.members)


def is_independent(s: Snapshot, nodes: Iterable[int]) -> bool:
    return s.is_independent(nodes)


def is_maximal(s: Snapshot, nodes: Iterable[int]) -> bool:
    """True when ``nodes`` is independent and no other node can join."""
    members = set(nodes)
    if not s.is_independent(members):
        return False
    for v in range(s.n):
        if v not in members and not any(u in members for u in s.adj[v]):
            return False
    return True


def exact_maxis(s: Snapshot, time_limit: float | None = 1.0) -> ExactResult:
    """Maximum independent set by branch and bound.

    ``time_limit=None`` (or ``inf``) runs to completion. On timeout the best
    incumbent is returned with ``proven_optimal=False``.
    """
    t0 = time.perf_counter()
    members, proven = _kernels.exact_mis(s.adj, time_limit)
    return ExactResult(frozenset(members), proven, time.perf_counter() - t0)


def greedy_maxis(s: Snapshot) -> frozenset:
    """Repeatedly take a minimum-degree vertex of the residual graph.

    Ties go to the smaller id, so the result is reproducible. The chosen
    vertex and its neighbors are then deleted; the output is maximal.
    """
    return frozenset(_kernels.greedy_mis(s.adj))


class UpdateState:
    """A maximal independent set maintained across edge events.

    Holds a mutable mirror of the snapshot and, per node, the number of
    neighbors currently in the set. Rules:

    * ``Add(u, v)`` with both endpoints in the set evicts the endpoint of
      higher degree (larger id on ties); neighbors of the evicted node that
      became free are re-added in min-degree order.
    * ``Delete(u, v)`` tries to add ``u``, then ``v``, if free.

    Afterwards, one-swaps run outward from the touched nodes. A member ``x``
    that has two non-adjacent non-member neighbors whose only in-set
    neighbor is ``x`` is replaced by them, and any node freed by that is
    added. Every swap grows the set, so the loop ends.
    """

    def __init__(self, s: Snapshot):
        self.nbrs = [set(a) for a in s.adj]
        self.current: set[int] = set()
        self.counts = [0] * s.n
        for v in sorted(greedy_maxis(s)):
            self._insert(v)

    @property
    def n(self) -> int:
        return len(self.nbrs)

    @property
    def members(self) -> frozenset:
        return frozenset(self.current)

    def snapshot(self) -> Snapshot:
        return Snapshot(tuple(tuple(sorted(a)) for a in self.nbrs))

    def _insert(self, v):
        self.current.add(v)
        for u in self.nbrs[v]:
            self.counts[u] += 1

    def _evict(self, v):
        self.current.discard(v)
        for u in self.nbrs[v]:
            self.counts[u] -= 1

    def _free(self, v):
        return v not in self.current and self.counts[v] == 0

    def step(self, e: EdgeEvent) -> "UpdateState":
        u, v = e.u, e.v
        if u == v or not (0 <= u < self.n and 0 <= v < self.n):
            raise IllegalEvent(f"t={e.time}: bad endpoints ({u}, {v})")
        present = v in self.nbrs[u]
        if e.is_add:
            if present:
                raise IllegalEvent(f"t={e.time}: edge ({u}, {v}) already present")
            self.nbrs[u].add(v)
            self.nbrs[v].add(u)
            if u in self.current:
                self.counts[v] += 1
            if v in self.current:
                self.counts[u] += 1
            dirty = {u, v}
            if u in self.current and v in self.current:
                du, dv = len(self.nbrs[u]), len(self.nbrs[v])
                loser = u if (du, u) > (dv, v) else v
                self._evict(loser)
                dirty.update(self.nbrs[loser])
                self._fill(self.nbrs[loser])
        else:
            if not present:
                raise IllegalEvent(f"t={e.time}: edge ({u}, {v}) not present")
            self.nbrs[u].discard(v)
            self.nbrs[v].discard(u)
            if u in self.current:
                self.counts[v] -= 1
            if v in self.current:
                self.counts[u] -= 1
            for w in (u, v):
                if self._free(w):
                    self._insert(w)
            dirty = {u, v}
        self._improve(dirty)
        return self

    def _fill(self, nodes):
        """Add every free node of ``nodes`` in min-degree order."""
        for w in sorted((w for w in nodes if self._free(w)), key=lambda w: (len(self.nbrs[w]), w)):
            if self._free(w):
                self._insert(w)

    def _swap_pair(self, x):
        """Two non-adjacent neighbors of member ``x`` that only ``x`` blocks."""
        tight = sorted((a for a in self.nbrs[x] if self.counts[a] == 1), key=lambda a: (len(self.nbrs[a]), a))
        for i, a in enumerate(tight):
            for b in tight[i + 1:]:
                if b not in self.nbrs[a]:
                    return a, b
        return None

    def _improve(self, dirty):
        heap = sorted(dirty)
        queued = set(heap)
        while heap:
            w = heapq.heappop(heap)
            queued.discard(w)
            members = [w] if w in self.current else sorted(x for x in self.nbrs[w] if x in self.current)
            for x in members:
                if x not in self.current:
                    continue
                pair = self._swap_pair(x)
                if pair is None:
                    continue
                self._evict(x)
                for a in pair:
                    self._insert(a)
                self._fill(self.nbrs[x])
                for y in self.nbrs[x]:
                    if y not in queued:
                        queued.add(y)
                        heapq.heappush(heap, y)

    def check(self) -> bool:
        """Counts consistent, set independent and maximal."""
        for v in range(self.n):
            c = sum(1 for u in self.nbrs[v] if u in self.current)
            if c != self.counts[v]:
                return False
            if v in self.current and c:
                return False
            if v not in self.current and c == 0:
                return False
        return True


def update_algo_init(s: Snapshot) -> UpdateState:
    return UpdateState(s)


def update_algo_step(st: UpdateState, e: EdgeEvent) -> UpdateState:
    return st.step(e)
