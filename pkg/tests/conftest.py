"""Shared fixtures, graph families and brute-force oracles."""

from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from dynmis.dyngraph import Snapshot


def path(n):
    return Snapshot.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle(n):
    return Snapshot.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete(n):
    return Snapshot.from_edges(n, itertools.combinations(range(n), 2))


def star(leaves):
    return Snapshot.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def petersen():
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Snapshot.from_edges(10, outer + spokes + inner)


def random_snapshot(rng: np.random.Generator, n: int, p: float) -> Snapshot:
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return Snapshot.from_edges(n, pairs)


def brute_force_mis(s: Snapshot) -> int:
    """Largest independent set size by enumerating every subset."""
    n = s.n
    nbr = [sum(1 << u for u in s.adj[v]) for v in range(n)]
    best = 0
    for mask in range(1 << n):
        size = mask.bit_count()
        if size <= best:
            continue
        m = mask
        ok = True
        while m:
            v = (m & -m).bit_length() - 1
            if nbr[v] & mask:
                ok = False
                break
            m &= m - 1
        if ok:
            best = size
    return best


def bfs_all(s: Snapshot, src: int) -> dict[int, int]:
    """Plain BFS from one node, no cutoff."""
    dist = {src: 0}
    frontier = [src]
    while frontier:
        nxt = []
        for v in frontier:
            for u in s.adj[v]:
                if u not in dist:
                    dist[u] = dist[v] + 1
                    nxt.append(u)
        frontier = nxt
    return dist


@st.composite
def snapshots(draw, max_n=12):
    n = draw(st.integers(min_value=1, max_value=max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Snapshot.from_edges(n, chosen)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance reporting: one pass/fail line per criterion in the terminal summary.

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "failed": [], "ran": 0})
    if report.when == "call":
        entry["ran"] += 1
    if report.failed:
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        ok = not entry["failed"] and entry["ran"] > 0
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {entry['title']}"
        if entry["failed"]:
            line += f" (failed: {', '.join(entry['failed'])})"
        if entry.get("notes"):
            line += f" [{'; '.join(entry['notes'])}]"
        terminalreporter.write_line(line)


@pytest.fixture
def measured(request):
    """Attach a measurement to the criterion line of the calling test."""
    mark = request.node.get_closest_marker("criterion")

    def note(text):
        number, title = mark.args
        _CRITERIA.setdefault(number, {"title": title, "failed": [], "ran": 0}).setdefault("notes", []).append(text)

    return note
