"""Dynamic graphs over a fixed node set: snapshots, edge events, replay.

A :class:`Snapshot` is an immutable adjacency structure with sorted
neighbor tuples. A :class:`DynamicGraph` is an initial snapshot plus an
ordered list of single-edge events; replaying the events yields G_1..G_T.

Text format::

    n <node_count> <initial_edge_count>
    e <u> <v>          (initial_edge_count lines)
    + <u> <v>          (edge addition at the next time step)
    - <u> <v>          (edge deletion at the next time step)
"""

from __future__ import annotations

import enum
from bisect import bisect_left, insort
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from . import _kernels


class EventError(ValueError):
    """An edge event that cannot be applied to the current snapshot."""


class AddExisting(EventError):
    pass


class DeleteMissing(EventError):
    pass


class SelfLoop(EventError):
    pass


class FormatError(ValueError):
    """Malformed dynamic-graph file."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class EventKind(enum.Enum):
    ADD = "+"
    DELETE = "-"


@dataclass(frozen=True)
class EdgeEvent:
    """A single edge addition or deletion; endpoints stored as ``u < v``."""

    u: int
    v: int
    kind: EventKind
    time: int = 0

    def __post_init__(self):
        if self.u > self.v:
            a, b = self.v, self.u
            object.__setattr__(self, "u", a)
            object.__setattr__(self, "v", b)

    @classmethod
    def add(cls, u: int, v: int, time: int = 0) -> "EdgeEvent":
        return cls(u, v, EventKind.ADD, time)

    @classmethod
    def delete(cls, u: int, v: int, time: int = 0) -> "EdgeEvent":
        return cls(u, v, EventKind.DELETE, time)

    @property
    def is_add(self) -> bool:
        return self.kind is EventKind.ADD

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.u, self.v)


class Snapshot:
    """Undirected simple graph on nodes ``0..n-1``.

    Neighbor lists are sorted tuples; instances are treated as immutable
    and compare by value.
    """

    __slots__ = ("adj", "edge_count")

    def __init__(self, adj: tuple[tuple[int, ...], ...], edge_count: int | None = None):
        self.adj = adj
        if edge_count is None:
            edge_count = sum(len(a) for a in adj) // 2
        self.edge_count = edge_count

    @classmethod
    def empty(cls, n: int) -> "Snapshot":
        return cls(((),) * n, 0)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Snapshot":
        nbrs: list[list[int]] = [[] for _ in range(n)]
        seen = set()
        for u, v in edges:
            if u == v:
                raise SelfLoop(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) outside node range 0..{n - 1}")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise AddExisting(f"duplicate edge {key}")
            seen.add(key)
            nbrs[u].append(v)
            nbrs[v].append(u)
        return cls(tuple(tuple(sorted(a)) for a in nbrs), len(seen))

    @property
    def n(self) -> int:
        return len(self.adj)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adj[v]

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def degrees(self) -> np.ndarray:
        return np.fromiter((len(a) for a in self.adj), dtype=np.int64, count=len(self.adj))

    def has_edge(self, u: int, v: int) -> bool:
        row = self.adj[u]
        i = bisect_left(row, v)
        return i < len(row) and row[i] == v

    def edges(self) -> Iterator[tuple[int, int]]:
        for u, row in enumerate(self.adj):
            for v in row[bisect_left(row, u + 1):]:
                yield (u, v)

    def is_independent(self, nodes: Iterable[int]) -> bool:
        members = set(nodes)
        return not any(v in members for u in members for v in self.adj[u])

    def __eq__(self, other):
        if not isinstance(other, Snapshot):
            return NotImplemented
        return self.adj == other.adj

    def __hash__(self):
        return hash(self.adj)

    def __repr__(self):
        return f"Snapshot(n={self.n}, edges={self.edge_count})"


def apply_event(s: Snapshot, e: EdgeEvent) -> Snapshot:
    """Return the snapshot that differs from ``s`` by exactly edge ``e``."""
    u, v = e.u, e.v
    if u == v:
        raise SelfLoop(f"t={e.time}: self-loop at node {u}")
    n = s.n
    if not (0 <= u < n and 0 <= v < n):
        raise EventError(f"t={e.time}: edge ({u}, {v}) outside node range 0..{n - 1}")
    present = s.has_edge(u, v)
    ru, rv = list(s.adj[u]), list(s.adj[v])
    if e.is_add:
        if present:
            raise AddExisting(f"t={e.time}: edge ({u}, {v}) already present")
        insort(ru, v)
        insort(rv, u)
        count = s.edge_count + 1
    else:
        if not present:
            raise DeleteMissing(f"t={e.time}: edge ({u}, {v}) not present")
        del ru[bisect_left(ru, v)]
        del rv[bisect_left(rv, u)]
        count = s.edge_count - 1
    adj = list(s.adj)
    adj[u] = tuple(ru)
    adj[v] = tuple(rv)
    return Snapshot(tuple(adj), count)


def hop_distances(s: Snapshot, sources: Iterable[int], cutoff: int) -> dict[int, int]:
    """BFS distances (at most ``cutoff``) from the nearest of ``sources``."""
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    return _kernels.hop_distances(s.adj, list(sources), int(cutoff))


def event_distances(s: Snapshot, e: EdgeEvent, cutoff: int) -> dict[int, int]:
    """Hop distance to an event: nearest endpoint, measured on ``s``."""
    return hop_distances(s, e.endpoints, cutoff)


def diameter(s: Snapshot) -> int:
    """Largest finite hop distance (max over connected components)."""
    return _kernels.diameter(s.adj)


@dataclass(frozen=True)
class DynamicGraph:
    initial: Snapshot
    events: tuple[EdgeEvent, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    @property
    def n(self) -> int:
        return self.initial.n

    @property
    def T(self) -> int:
        return len(self.events)

    def snapshots(self) -> Iterator[Snapshot]:
        """Yield G_0, G_1, ..., G_T."""
        s = self.initial
        yield s
        for e in self.events:
            s = apply_event(s, e)
            yield s

    def snapshot_at(self, t: int) -> Snapshot:
        if not 0 <= t <= self.T:
            raise IndexError(f"time {t} outside 0..{self.T}")
        s = self.initial
        for e in self.events[:t]:
            s = apply_event(s, e)
        return s


@dataclass(frozen=True)
class Violation:
    t: int
    kind: str
    u: int
    v: int


def validate(dg: DynamicGraph) -> list[Violation]:
    """Replay every event; an empty list means the stream is valid.

    Offending events are reported and skipped so later ones are still checked.
    """
    problems = []
    s = dg.initial
    for t, e in enumerate(dg.events, start=1):
        try:
            s = apply_event(s, e)
        except EventError as exc:
            problems.append(Violation(t, type(exc).__name__, e.u, e.v))
    return problems


def dumps(dg: DynamicGraph) -> str:
    edges = list(dg.initial.edges())
    lines = [f"n {dg.n} {len(edges)}"]
    lines.extend(f"e {u} {v}" for u, v in edges)
    lines.extend(f"{e.kind.value} {e.u} {e.v}" for e in dg.events)
    return "\n".join(lines) + "\n"


def save(dg: DynamicGraph, path) -> None:
    Path(path).write_text(dumps(dg))


def _ints(parts, lineno, n):
    try:
        u, v = int(parts[1]), int(parts[2])
    except ValueError:
        raise FormatError(lineno, f"non-integer endpoint in {' '.join(parts)!r}") from None
    if not (0 <= u < n and 0 <= v < n):
        raise FormatError(lineno, f"endpoint outside node range 0..{n - 1}")
    if u == v:
        raise FormatError(lineno, f"self-loop at node {u}")
    return u, v


def loads(text: str) -> DynamicGraph:
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise FormatError(1, "empty file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "n":
        raise FormatError(1, "expected header 'n <node_count> <initial_edge_count>'")
    try:
        n, m = int(head[1]), int(head[2])
    except ValueError:
        raise FormatError(1, "non-integer header field") from None
    if n < 0 or m < 0:
        raise FormatError(1, "negative header field")
    if len(lines) < 1 + m:
        raise FormatError(len(lines), f"expected {m} initial edge lines")
    edges = []
    seen = set()
    for i in range(1, 1 + m):
        parts = lines[i].split()
        if len(parts) != 3 or parts[0] != "e":
            raise FormatError(i + 1, "expected 'e <u> <v>'")
        u, v = _ints(parts, i + 1, n)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise FormatError(i + 1, f"duplicate initial edge {key}")
        seen.add(key)
        edges.append(key)
    events = []
    for i in range(1 + m, len(lines)):
        parts = lines[i].split()
        if len(parts) != 3 or parts[0] not in ("+", "-"):
            raise FormatError(i + 1, "expected '+ <u> <v>' or '- <u> <v>'")
        u, v = _ints(parts, i + 1, n)
        events.append(EdgeEvent(u, v, EventKind(parts[0]), i - m))
    return DynamicGraph(Snapshot.from_edges(n, edges), tuple(events))


def load(path) -> DynamicGraph:
    return loads(Path(path).read_text())
