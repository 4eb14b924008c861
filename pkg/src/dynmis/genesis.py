"""Synthetic dynamic graphs and chronological splits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dyngraph import DynamicGraph, EdgeEvent, Snapshot

MAX_RESAMPLES = 100
_PAIR_TRIES = 50


class DegreeSequenceInfeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class ER:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"edge probability must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class PowerLaw:
    exponent: float
    min_degree: int = 2

    def __post_init__(self):
        if self.exponent <= 1.0:
            raise ValueError("power-law exponent must exceed 1")
        if self.min_degree < 1:
            raise ValueError("min_degree must be at least 1")


@dataclass(frozen=True)
class GenSpec:
    topology: ER | PowerLaw
    n: int
    T: int = 0
    add_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")
        if self.T < 0:
            raise ValueError("T must be non-negative")
        if not 0.0 <= self.add_fraction <= 1.0:
            raise ValueError("add_fraction must lie in [0, 1]")

    def _rng(self, stream: int) -> np.random.Generator:
        return np.random.default_rng([self.seed & (2**64 - 1), stream])


# Node/step counts of the three dataset scales.
PRESETS = {
    "small": dict(n=100, T=50_000),
    "medium": dict(n=1_000, T=100_000),
    "large": dict(n=10_000, T=5_000),
}


def _erdos_renyi(n, p, rng):
    edges = []
    for i in range(n - 1):
        hits = np.flatnonzero(rng.random(n - i - 1) < p)
        edges.extend((i, i + 1 + int(j)) for j in hits)
    return edges


def _power_law_degrees(n, exponent, min_degree, rng):
    kmax = n - 1
    ks = np.arange(min_degree, kmax + 1)
    w = ks.astype(float) ** -exponent
    deg = rng.choice(ks, size=n, p=w / w.sum())
    if deg.sum() % 2:
        # bump one node below the cap to make the stub count even
        order = rng.permutation(n)
        for v in order:
            if deg[v] < kmax:
                deg[v] += 1
                break
        else:
            deg[order[0]] -= 1
    return deg


def _pair_stubs(deg, rng):
    stubs = list(np.repeat(np.arange(len(deg)), deg)[rng.permutation(int(deg.sum()))])
    stubs = [int(s) for s in stubs]
    seen = set()
    edges = []
    while stubs:
        a = stubs.pop()
        for _ in range(_PAIR_TRIES):
            j = int(rng.integers(len(stubs)))
            b = stubs[j]
            key = (a, b) if a < b else (b, a)
            if a != b and key not in seen:
                stubs[j] = stubs[-1]
                stubs.pop()
                seen.add(key)
                edges.append(key)
                break
        else:
            return None
    return edges


def _configuration_model(n, topo: PowerLaw, rng):
    if n <= topo.min_degree:
        raise DegreeSequenceInfeasible(f"min_degree {topo.min_degree} impossible with {n} nodes")
    for _ in range(MAX_RESAMPLES):
        deg = _power_law_degrees(n, topo.exponent, topo.min_degree, rng)
        edges = _pair_stubs(deg, rng)
        if edges is not None:
            return edges
    raise DegreeSequenceInfeasible(f"no simple realization found after {MAX_RESAMPLES} resamples")


def gen_initial(spec: GenSpec) -> Snapshot:
    """Draw G_0 for ``spec``."""
    rng = spec._rng(0)
    if isinstance(spec.topology, ER):
        edges = _erdos_renyi(spec.n, spec.topology.p, rng)
    else:
        edges = _configuration_model(spec.n, spec.topology, rng)
    return Snapshot.from_edges(spec.n, edges)


def gen_events(s0: Snapshot, spec: GenSpec) -> DynamicGraph:
    """Sample ``spec.T`` valid events against the evolving snapshot.

    Each step adds a uniformly random absent pair with probability
    ``add_fraction`` and otherwise deletes a uniformly random present edge;
    when one kind is impossible the other is used.
    """
    rng = spec._rng(1)
    n = s0.n
    max_edges = n * (n - 1) // 2
    if spec.T and max_edges == 0:
        raise ValueError("cannot generate events on fewer than two nodes")
    nbrs = [set(a) for a in s0.adj]
    edges = list(s0.edges())
    pos = {e: i for i, e in enumerate(edges)}
    events = []
    for t in range(1, spec.T + 1):
        add = rng.random() < spec.add_fraction
        if add and len(edges) == max_edges:
            add = False
        elif not add and not edges:
            add = True
        if add:
            if len(edges) <= max_edges // 2:
                while True:
                    u, v = (int(x) for x in rng.integers(n, size=2))
                    if u != v and v not in nbrs[u]:
                        break
            else:
                absent = [(a, b) for a in range(n) for b in range(a + 1, n) if b not in nbrs[a]]
                u, v = absent[int(rng.integers(len(absent)))]
            key = (min(u, v), max(u, v))
            nbrs[u].add(v)
            nbrs[v].add(u)
            pos[key] = len(edges)
            edges.append(key)
            events.append(EdgeEvent.add(*key, time=t))
        else:
            i = int(rng.integers(len(edges)))
            key = edges[i]
            last = edges.pop()
            if i < len(edges):
                edges[i] = last
                pos[last] = i
            del pos[key]
            u, v = key
            nbrs[u].discard(v)
            nbrs[v].discard(u)
            events.append(EdgeEvent.delete(u, v, time=t))
    return DynamicGraph(s0, tuple(events))


def generate(spec: GenSpec) -> DynamicGraph:
    return gen_events(gen_initial(spec), spec)


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.7
    val: float = 0.15
    test: float = 0.15

    def __post_init__(self):
        fr = [Fraction(str(x)) for x in (self.train, self.val, self.test)]
        if any(f <= 0 for f in fr):
            raise ValueError("split fractions must be positive")
        if sum(fr) != 1:
            raise ValueError(f"split fractions must sum to 1, got {float(sum(fr))}")


@dataclass(frozen=True)
class EventRange:
    """Inclusive 1-based range of event times; empty when ``last < first``."""

    first: int
    last: int

    def __len__(self):
        return max(0, self.last - self.first + 1)

    def __iter__(self):
        return iter(range(self.first, self.last + 1))

    def as_tuple(self) -> tuple[int, int]:
        return (self.first, self.last)


def split(dg_or_T: DynamicGraph | int, sp: SplitSpec = SplitSpec()) -> tuple[EventRange, EventRange, EventRange]:
    T = dg_or_T.T if isinstance(dg_or_T, DynamicGraph) else int(dg_or_T)
    f_train = Fraction(str(sp.train))
    f_val = Fraction(str(sp.val))
    b1 = math.floor(T * f_train)
    b2 = math.floor(T * (f_train + f_val))
    return EventRange(1, b1), EventRange(b1 + 1, b2), EventRange(b2 + 1, T)


SPLITS = {"train": 0, "val": 1, "test": 2}
