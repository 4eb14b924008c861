"""Benchmark harness: replay a test range through several methods and score
each produced set against the exact oracle."""

from __future__ import annotations

import csv
import io
import json
import resource
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .dyngraph import DynamicGraph, apply_event
from .genesis import EventRange
from .model import Engine, Variant
from .solvers import UpdateState, exact_maxis, greedy_maxis, is_independent
from .trainer import Checkpoint, infer_state

LEARNED = tuple(v.value for v in Variant)
METHODS = LEARNED + ("greedy", "update", "exact")
CSV_HEADER = ("method", "t", "size", "oracle", "ratio", "seconds")


class CheckpointMissing(KeyError):
    pass


class DependentSetProduced(AssertionError):
    """A method emitted a set with an internal edge. Never a statistic."""


@dataclass(frozen=True)
class EventRecord:
    t: int
    size: int
    oracle: int
    ratio: float
    seconds: float
    touched_memory_nodes: int = 0
    touched_estimate_nodes: int = 0
    oracle_timeout: bool = False


@dataclass
class MethodResult:
    method: str
    records: list[EventRecord] = field(default_factory=list)
    peak_rss_bytes: int = 0

    def ratios(self) -> np.ndarray:
        return np.array([r.ratio for r in self.records], dtype=np.float64)

    @property
    def defined(self) -> bool:
        return bool(self.records)

    def aggregates(self) -> dict:
        """Mean/std ratio and mean seconds per graph; ``None`` when no records."""
        if not self.records:
            return {"ratio_mean": None, "ratio_std": None, "seconds_mean": None, "events": 0,
                    "oracle_timeouts": 0, "undefined": True, "peak_rss_bytes": self.peak_rss_bytes}
        r = self.ratios()
        return {
            "ratio_mean": float(r.mean()),
            "ratio_std": float(r.std()),
            "seconds_mean": float(np.mean([x.seconds for x in self.records])),
            "events": len(self.records),
            "oracle_timeouts": sum(x.oracle_timeout for x in self.records),
            "undefined": False,
            "peak_rss_bytes": self.peak_rss_bytes,
        }

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "records": [asdict(r) for r in self.records],
            "peak_rss_bytes": self.peak_rss_bytes,
            "aggregates": self.aggregates(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MethodResult":
        return cls(d["method"], [EventRecord(**r) for r in d["records"]], int(d["peak_rss_bytes"]))


def peak_rss_bytes() -> int:
    """Process-wide peak resident set size (Linux reports KiB)."""
    return int(resource.getrusage(resource.RUSAGE_SELF).ru_maxrss) * 1024


def learned_engine(ck: Checkpoint, dg: DynamicGraph, until: int) -> Engine:
    """Engine positioned at event ``until``.

    A checkpoint trained on this graph is replayed from its own position. One
    trained on a graph of another size is warm-started on this graph's G_0
    with radii recomputed from its diameter.
    """
    if ck.state.memory.shape[0] == dg.n and ck.time <= until:
        s, st = infer_state(ck, dg, until)
        return Engine(ck.params.copy(), ck.cfg, s, st)
    cfg = ck.cfg.resolved_for(dg.initial)
    eng = Engine.warm_start(ck.params.copy(), cfg, dg.initial)
    for e in dg.events[:until]:
        eng.step(e)
    return eng


class _Runner:
    """Per-method incremental state; ``produce`` returns (set, touched_m, touched_e)."""

    def __init__(self, method, dg, start, ck):
        self.method = method
        s = dg.snapshot_at(start)
        if method in LEARNED:
            self.engine = learned_engine(ck, dg, start)
        elif method == "update":
            self.update = UpdateState(s)

    def produce(self, s, e, oracle_time_limit):
        if self.method in LEARNED:
            res = self.engine.step(e)
            return self.engine.solution(), len(res.memory_nodes), len(res.estimate_nodes)
        if self.method == "greedy":
            return greedy_maxis(s), 0, 0
        if self.method == "update":
            return self.update.step(e).members, 0, 0
        return exact_maxis(s, oracle_time_limit).members, 0, 0


def run_bench(dg: DynamicGraph, test_range: EventRange, methods, ckpts=None,
              oracle_time_limit: float | None = 1.0, timing: bool = True) -> list[MethodResult]:
    """Score ``methods`` on every event of ``test_range``.

    ``ckpts`` maps learned method names to checkpoints. With ``timing=False``
    every ``seconds`` field is 0.0, which makes reports byte-reproducible.
    """
    ckpts = dict(ckpts or {})
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValueError(f"unknown methods: {', '.join(unknown)}")
    for m in methods:
        if m in LEARNED and m not in ckpts:
            raise CheckpointMissing(m)
    results = {m: MethodResult(m) for m in methods}
    if len(test_range) == 0:
        for r in results.values():
            r.peak_rss_bytes = peak_rss_bytes()
        return list(results.values())
    start = test_range.first - 1
    runners = [_Runner(m, dg, start, ckpts.get(m)) for m in methods]
    s = dg.snapshot_at(start)
    for e in dg.events[start:test_range.last]:
        s = apply_event(s, e)
        oracle = exact_maxis(s, oracle_time_limit)
        for run in runners:
            t0 = time.perf_counter()
            members, tm, te = run.produce(s, e, oracle_time_limit)
            dt = time.perf_counter() - t0 if timing else 0.0
            if not is_independent(s, members):
                raise DependentSetProduced(f"{run.method} at t={e.time}")
            results[run.method].records.append(
                EventRecord(e.time, len(members), oracle.size, len(members) / oracle.size, dt, tm, te,
                            not oracle.proven_optimal)
            )
    for r in results.values():
        r.peak_rss_bytes = peak_rss_bytes()
    return list(results.values())


def _fmt_float(x: float) -> str:
    return repr(float(x))


def emit_report(results, fmt: str = "table") -> bytes:
    if fmt == "json":
        doc = {"peak_rss_note": "process-wide peak RSS at harness exit, not training memory",
               "results": [r.to_dict() for r in results]}
        return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in results:
            for x in r.records:
                w.writerow((r.method, x.t, x.size, x.oracle, _fmt_float(x.ratio), _fmt_float(x.seconds)))
        return buf.getvalue().encode()
    if fmt == "table":
        return _table(results).encode()
    raise ValueError(f"unknown report format {fmt!r}")


def load_report(blob: bytes) -> list[MethodResult]:
    """Inverse of ``emit_report(..., "json")``."""
    return [MethodResult.from_dict(d) for d in json.loads(blob)["results"]]


def _table(results) -> str:
    def key(r):
        agg = r.aggregates()
        return (agg["undefined"], -(agg["ratio_mean"] or 0.0), r.method)

    rows = [("method", "ratio (mean±std)", "s/g", "events", "timeouts")]
    for r in sorted(results, key=key):
        a = r.aggregates()
        if a["undefined"]:
            rows.append((r.method, "n/a (no events)", "n/a", "0", "0"))
            continue
        rows.append((r.method, f"{a['ratio_mean']:.3f}±{a['ratio_std']:.3f}", f"{a['seconds_mean']:.4f}",
                     str(a["events"]), str(a["oracle_timeouts"])))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    peak = max((r.peak_rss_bytes for r in results), default=0)
    lines.append(f"peak RSS {peak / 2**20:.1f} MiB (whole process at exit; not comparable to training-memory figures)")
    return "\n".join(lines) + "\n"

