"""Pre-training on G_0, event-driven training, checkpoints."""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dyngraph import DynamicGraph, Snapshot, apply_event
from .genesis import EventRange
from .model import Config, Engine, NodeState, build_memories, event_forward, full_estimates
from .neural import checkpoint as ckio
from .neural.adam import AdamState, adam_step
from .neural.autodiff import NonFiniteValue, no_grad
from .neural.layers import ModelParams

log = logging.getLogger(__name__)

FORMAT = "dynmis-checkpoint"


class NonFiniteLoss(FloatingPointError):
    pass


class CheckpointMismatch(ValueError):
    pass


@dataclass(frozen=True)
class TrainRunSpec:
    epochs_max: int = 100
    window: int = 10
    rel_tol: float = 1e-3
    seeds: tuple[int, ...] = (0, 1, 2)

    def __post_init__(self):
        if self.epochs_max < 1:
            raise ValueError("epochs_max must be at least 1")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.window < 1:
            raise ValueError("window must be at least 1")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))


@dataclass
class Checkpoint:
    params: ModelParams
    state: NodeState
    cfg: Config
    time: int = 0
    provenance: dict = field(default_factory=dict)

    def tensors(self):
        out = [(f"param/{k}", self.params.arrays[k]) for k, _ in ModelParams.shapes(self.cfg.dims)]
        out.append(("memory", self.state.memory))
        out.append(("estimate", self.state.estimate))
        return out

    def meta(self) -> dict:
        return {
            "format": FORMAT,
            "config": self.cfg.to_dict(),
            "time": self.time,
            "n": int(self.state.estimate.shape[0]),
            "provenance": self.provenance,
        }

    def save(self, path) -> None:
        ckio.write(path, self.tensors(), self.meta())

    @classmethod
    def load(cls, path) -> "Checkpoint":
        tensors, meta = ckio.read(path)
        if meta.get("format") != FORMAT:
            raise ckio.CheckpointError(f"{path}: missing or foreign sidecar descriptor")
        cfg = Config.from_dict(meta["config"])
        named = dict(tensors)
        params = ModelParams(cfg.dims, {k: named[f"param/{k}"] for k, _ in ModelParams.shapes(cfg.dims)})
        params.check()
        state = NodeState(named["memory"], named["estimate"])
        return cls(params, state, cfg, int(meta["time"]), meta.get("provenance", {}))

    def engine(self, snapshot: Snapshot) -> Engine:
        return Engine(self.params.copy(), self.cfg, snapshot, self.state.copy())


def stabilized(history, window: int, rel_tol: float) -> bool:
    """(max - min) / (|mean| + 1e-12) over the last ``window`` losses < ``rel_tol``."""
    if len(history) < window:
        return False
    tail = np.asarray(history[-window:], dtype=np.float64)
    return float((tail.max() - tail.min()) / (abs(tail.mean()) + 1e-12)) < rel_tol


def _adam(cfg: Config) -> AdamState:
    return AdamState(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)


def _grads(tp):
    return {k: t.grad for k, t in tp.items() if t.grad is not None}


def pretrain_seed(g0: Snapshot, cfg: Config, spec: TrainRunSpec, seed: int, log_rows=None) -> Checkpoint:
    """One pre-training run; returns the least-loss epoch of that run.

    Each epoch starts from zero memories, adds G_0's edges one at a time in
    a seed-fixed order (endpoint memories only), estimates every node, and
    takes one Adam step on the summed loss. Gradients run through the whole
    construction sequence.
    """
    rng = np.random.default_rng(seed)
    params = ModelParams.init(cfg.dims, rng)
    edges = list(g0.edges())
    order = [edges[i] for i in rng.permutation(len(edges))]
    adam = _adam(cfg)
    history = []
    best = None
    for epoch in range(1, spec.epochs_max + 1):
        t0 = time.perf_counter()
        tp = params.leaves()
        mem = build_memories(tp, g0.n, order, cfg.dims.memory_dim)
        p, loss = full_estimates(tp, cfg, mem, g0)
        value = float(loss.data)
        try:
            loss.backward()
        except NonFiniteValue as exc:
            raise NonFiniteLoss(f"seed {seed}, pre-training epoch {epoch}: {exc}") from exc
        if best is None or value < best.provenance["loss"]:
            best = Checkpoint(
                params.copy(),
                NodeState(mem.data.copy(), p.data.copy()),
                cfg,
                0,
                {"phase": "pretrain", "seed": seed, "epoch": epoch, "loss": value},
            )
        adam_step(params.arrays, _grads(tp), adam)
        history.append(value)
        if log_rows is not None:
            log_rows.append(
                {"phase": "pretrain", "seed": seed, "epoch": epoch, "loss": value,
                 "seconds": time.perf_counter() - t0, "touched_memory_nodes": 2 * len(order)}
            )
        log.debug("pretrain seed=%d epoch=%d loss=%.6f", seed, epoch, value)
        if stabilized(history, spec.window, spec.rel_tol):
            break
    return best


def worker_count() -> int:
    """Parallel job cap from ``DYNMIS_THREADS`` (default 1)."""
    raw = os.environ.get("DYNMIS_THREADS", "1")
    try:
        k = int(raw)
    except ValueError:
        raise ValueError(f"DYNMIS_THREADS must be a positive integer, got {raw!r}") from None
    if k < 1:
        raise ValueError(f"DYNMIS_THREADS must be a positive integer, got {raw!r}")
    return k


def _pretrain_job(args):
    g0, cfg, spec, seed = args
    rows = []
    try:
        return pretrain_seed(g0, cfg, spec, seed, rows), rows, None
    except NonFiniteLoss as exc:
        return None, rows, exc


def pretrain(g0: Snapshot, cfg: Config, spec: TrainRunSpec = TrainRunSpec(), log_rows=None,
             workers: int | None = None) -> Checkpoint:
    """Pre-train once per seed and keep the run with the least loss.

    Seeds run as independent processes, at most ``workers`` at a time
    (default ``DYNMIS_THREADS``); the result does not depend on the count.
    A seed whose loss turns non-finite is dropped; if every seed fails the
    last error is raised.
    """
    if not spec.seeds:
        raise ValueError("no seeds given")
    workers = worker_count() if workers is None else workers
    jobs = [(g0, cfg, spec, seed) for seed in spec.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            outcomes = list(pool.map(_pretrain_job, jobs))
    else:
        outcomes = [_pretrain_job(j) for j in jobs]
    best = None
    failure = None
    for ck, rows, exc in outcomes:
        if log_rows is not None:
            log_rows.extend(rows)
        if exc is not None:
            log.warning("%s", exc)
            failure = exc
            continue
        if best is None or ck.provenance["loss"] < best.provenance["loss"]:
            best = ck
    if best is None:
        raise failure
    return best


def _roll_forward(ck: Checkpoint, dg: DynamicGraph, until: int):
    """Snapshot at ``ck.time`` and the checkpoint's state advanced to ``until``."""
    if until < ck.time:
        raise CheckpointMismatch(f"checkpoint is at t={ck.time}, past requested t={until}")
    s = dg.snapshot_at(ck.time)
    eng = Engine(ck.params.copy(), ck.cfg, s, ck.state.copy())
    for e in dg.events[ck.time:until]:
        eng.step(e)
    return eng.snapshot, eng.state


def train(ck: Checkpoint, dg: DynamicGraph, train_range: EventRange, spec: TrainRunSpec = TrainRunSpec(),
          log_rows=None) -> Checkpoint:
    """Event-driven training over ``train_range``; returns the least-loss epoch.

    Every epoch restarts from the checkpoint's state rolled forward to the
    start of the range, then for each event: apply it, update memories
    (radius alpha), re-estimate (radius beta), and take an Adam step on the
    summed loss of the re-estimated nodes.
    """
    if ck.state.memory.shape != (dg.n, ck.cfg.dims.memory_dim):
        raise CheckpointMismatch("checkpoint does not match graph size or memory dimension")
    if len(train_range) == 0:
        return ck
    cfg = ck.cfg
    s_start, st_start = _roll_forward(ck, dg, train_range.first - 1)
    params = ck.params.copy()
    adam = _adam(cfg)
    history = []
    best = None
    events = dg.events[train_range.first - 1:train_range.last]
    for epoch in range(1, spec.epochs_max + 1):
        t0 = time.perf_counter()
        st = st_start.copy()
        s = s_start
        total = 0.0
        touched_m = touched_e = 0
        for e in events:
            s = apply_event(s, e)
            tp = params.leaves()
            res = event_forward(tp, cfg, st, s, e)
            try:
                res.loss.backward()
            except NonFiniteValue as exc:
                raise NonFiniteLoss(f"epoch {epoch}, t={e.time}: {exc}") from exc
            total += float(res.loss.data)
            adam_step(params.arrays, _grads(tp), adam)
            res.write(st)
            touched_m += len(res.memory_nodes)
            touched_e += len(res.estimate_nodes)
        history.append(total)
        if log_rows is not None:
            log_rows.append(
                {"phase": "train", "epoch": epoch, "loss": total, "seconds": time.perf_counter() - t0,
                 "touched_memory_nodes": touched_m, "touched_estimate_nodes": touched_e}
            )
        log.debug("train epoch=%d loss=%.6f", epoch, total)
        if best is None or total < best.provenance["loss"]:
            prov = dict(ck.provenance)
            prov.update({"phase": "train", "epoch": epoch, "loss": total,
                         "pretrain_seed": ck.provenance.get("seed")})
            prov.pop("seed", None)
            best = Checkpoint(params.copy(), st, cfg, train_range.last, prov)
        if stabilized(history, spec.window, spec.rel_tol):
            break
    return best


def infer_state(ck: Checkpoint, dg: DynamicGraph, until: int) -> tuple[Snapshot, NodeState]:
    """Checkpoint state replayed (without learning) up to event ``until``."""
    with no_grad():
        return _roll_forward(ck, dg, until)


def save_log(rows, path) -> None:
    Path(path).write_text(json.dumps(rows, indent=2) + "\n")
