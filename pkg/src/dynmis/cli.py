"""Command line entry point: ``dynmis gen|solve|pretrain|train|bench``."""

from __future__ import annotations

import json
import logging
import sys
import time
from pathlib import Path

import click

from . import bench as bench_mod
from . import dyngraph, genesis, solvers, trainer
from .model import Config, Variant
from .neural.layers import Dims


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {text!r}") from None


def _fractions(text: str) -> genesis.SplitSpec:
    try:
        parts = [float(x) for x in text.split(",")]
        return genesis.SplitSpec(*parts)
    except (TypeError, ValueError) as exc:
        raise click.BadParameter(str(exc)) from None


def _load_graph(path) -> dyngraph.DynamicGraph:
    try:
        return dyngraph.load(path)
    except dyngraph.FormatError as exc:
        raise click.ClickException(f"{path}: {exc}") from None


def _write(out, blob: bytes) -> None:
    if out in (None, "-"):
        sys.stdout.buffer.write(blob)
        sys.stdout.flush()
    else:
        Path(out).write_bytes(blob)


@click.group()
@click.option("-v", "--verbose", count=True, help="Repeat for more logging.")
def main(verbose):
    """Approximate maximum independent sets on dynamic graphs."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--topology", type=click.Choice(["er", "pl"]), default="er", show_default=True)
@click.option("--preset", type=click.Choice(sorted(genesis.PRESETS)), help="Sets --n and --events.")
@click.option("--n", "n", type=int, help="Node count.")
@click.option("--p", "p", type=float, default=0.05, show_default=True, help="ER edge probability.")
@click.option("--exponent", type=float, default=2.5, show_default=True, help="Power-law exponent.")
@click.option("--min-degree", type=int, default=2, show_default=True, help="Power-law minimum degree.")
@click.option("--events", "T", type=int, help="Number of edge events.")
@click.option("--add-frac", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def gen(topology, preset, n, p, exponent, min_degree, T, add_frac, seed, out):
    """Generate a synthetic dynamic graph."""
    size = dict(genesis.PRESETS[preset]) if preset else {}
    if n is not None:
        size["n"] = n
    if T is not None:
        size["T"] = T
    if "n" not in size:
        raise click.UsageError("give --n or --preset")
    topo = genesis.ER(p) if topology == "er" else genesis.PowerLaw(exponent, min_degree)
    try:
        spec = genesis.GenSpec(topo, size["n"], size.get("T", 0), add_frac, seed)
        dg = genesis.generate(spec)
    except (ValueError, genesis.DegreeSequenceInfeasible) as exc:
        raise click.ClickException(str(exc)) from None
    dyngraph.save(dg, out)
    click.echo(f"wrote {out}: n={dg.n} m0={dg.initial.edge_count} T={dg.T}", err=True)


@main.command()
@click.option("--method", type=click.Choice(["exact", "greedy", "update"]), required=True)
@click.option("--input", "path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--time-limit", type=float, default=1.0, show_default=True, help="Exact solver limit (s); 0 = none.")
@click.option("--at", "at", type=int, help="Solve only snapshot t (default: every snapshot).")
@click.option("--report", type=click.Path(dir_okay=False), help="JSON report path (default stdout).")
def solve(method, path, time_limit, at, report):
    """Solve the snapshots of a dynamic graph with a baseline."""
    dg = _load_graph(path)
    limit = None if time_limit <= 0 else time_limit
    times = range(dg.T + 1) if at is None else [at]
    if at is not None and not 0 <= at <= dg.T:
        raise click.BadParameter(f"--at must lie in [0, {dg.T}]")
    records = []
    members = frozenset()
    if method == "update":
        t0 = time.perf_counter()
        st = solvers.UpdateState(dg.initial)
        seconds = time.perf_counter() - t0
        for t in range(0, times[-1] + 1):
            if t > 0:
                t0 = time.perf_counter()
                st.step(dg.events[t - 1])
                seconds = time.perf_counter() - t0
            if t in times:
                members = st.members
                records.append({"t": t, "size": len(members), "seconds": seconds})
    else:
        s = dg.initial
        for t in range(0, times[-1] + 1):
            if t > 0:
                s = dyngraph.apply_event(s, dg.events[t - 1])
            if t not in times:
                continue
            t0 = time.perf_counter()
            if method == "exact":
                res = solvers.exact_maxis(s, limit)
                members = res.members
                rec = {"proven_optimal": res.proven_optimal}
            else:
                members = solvers.greedy_maxis(s)
                rec = {}
            rec.update({"t": t, "size": len(members), "seconds": time.perf_counter() - t0})
            records.append(rec)
    doc = {"method": method, "graph": str(path), "records": records,
           "final": {"t": times[-1], "members": sorted(members)}}
    _write(report, (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode())


def _train_options(f):
    opts = [
        click.option("--graph", type=click.Path(exists=True, dir_okay=False), required=True),
        click.option("--variant", type=click.Choice([v.value for v in Variant]), default="bcas", show_default=True),
        click.option("--gamma", type=float, default=0.25, show_default=True),
        click.option("--c", "c", type=float, default=3.0, show_default=True),
        click.option("--seeds", default="0,1,2", show_default=True, help="Comma-separated pre-training seeds."),
        click.option("--lr", type=float, default=1e-3, show_default=True),
        click.option("--memory-dim", type=int, default=32, show_default=True),
        click.option("--pretrain-epochs", type=int, default=100, show_default=True),
        click.option("--window", type=int, default=10, show_default=True),
        click.option("--rel-tol", type=float, default=1e-3, show_default=True),
        click.option("--out", type=click.Path(dir_okay=False), required=True, help="Checkpoint path."),
        click.option("--log", "log_path", type=click.Path(dir_okay=False), help="JSON training log."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _pretrained(dg, variant, gamma, c, seeds, lr, memory_dim, pretrain_epochs, window, rel_tol, rows):
    try:
        # hidden MLP layer at half the embedding width (16 at the default 32)
        dims = Dims(memory_dim, memory_dim, memory_dim, (memory_dim // 2, 1) if memory_dim >= 4 else (1,))
        cfg = Config.for_graph(dg.initial, variant, gamma, c=c, lr=lr, dims=dims)
        spec = trainer.TrainRunSpec(pretrain_epochs, window, rel_tol, _ints(seeds))
        return trainer.pretrain(dg.initial, cfg, spec, rows)
    except (ValueError, trainer.NonFiniteLoss) as exc:
        raise click.ClickException(str(exc)) from None


@main.command()
@_train_options
def pretrain(graph, variant, gamma, c, seeds, lr, memory_dim, pretrain_epochs, window, rel_tol, out, log_path):
    """Pre-train on G_0 by replaying its construction."""
    dg = _load_graph(graph)
    rows = []
    ck = _pretrained(dg, variant, gamma, c, seeds, lr, memory_dim, pretrain_epochs, window, rel_tol, rows)
    ck.save(out)
    if log_path:
        trainer.save_log(rows, log_path)
    click.echo(f"pretrained seed={ck.provenance['seed']} epoch={ck.provenance['epoch']} "
               f"loss={ck.provenance['loss']:.6g} -> {out}", err=True)


@main.command()
@_train_options
@click.option("--init", "init", type=click.Path(exists=True, dir_okay=False),
              help="Start from this checkpoint instead of pre-training first.")
@click.option("--epochs", type=int, default=30, show_default=True, help="Event-training epoch cap.")
@click.option("--split", "split_fracs", default="0.7,0.15,0.15", show_default=True)
def train(graph, variant, gamma, c, seeds, lr, memory_dim, pretrain_epochs, window, rel_tol, out, log_path,
          init, epochs, split_fracs):
    """Event-driven training over the train split."""
    dg = _load_graph(graph)
    rows = []
    if init:
        ck = trainer.Checkpoint.load(init)
    else:
        ck = _pretrained(dg, variant, gamma, c, seeds, lr, memory_dim, pretrain_epochs, window, rel_tol, rows)
    train_range, _, _ = genesis.split(dg, _fractions(split_fracs))
    try:
        spec = trainer.TrainRunSpec(epochs, window, rel_tol, _ints(seeds))
        ck = trainer.train(ck, dg, train_range, spec, rows)
    except (trainer.NonFiniteLoss, trainer.CheckpointMismatch) as exc:
        raise click.ClickException(str(exc)) from None
    ck.save(out)
    if log_path:
        trainer.save_log(rows, log_path)
    click.echo(f"trained epoch={ck.provenance.get('epoch')} loss={ck.provenance.get('loss'):.6g} -> {out}", err=True)


@main.command()
@click.option("--graph", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--split", "which", type=click.Choice(list(genesis.SPLITS)), default="test", show_default=True)
@click.option("--split-fractions", default="0.7,0.15,0.15", show_default=True)
@click.option("--methods", default="bcas,nocas,greedy,update,exact", show_default=True)
@click.option("--ckpt", "ckpts", multiple=True, type=click.Path(exists=True, dir_okay=False),
              help="Checkpoint(s); each serves the learned method named by its variant.")
@click.option("--oracle-limit", type=float, default=1.0, show_default=True, help="Seconds; 0 = none.")
@click.option("--format", "fmt", type=click.Choice(["table", "json", "csv"]), default="table", show_default=True)
@click.option("--no-timing", is_flag=True, help="Record seconds as 0 for byte-reproducible reports.")
@click.option("--out", type=click.Path(dir_okay=False), help="Report path (default stdout).")
def bench(graph, which, split_fractions, methods, ckpts, oracle_limit, fmt, no_timing, out):
    """Benchmark methods on one split of a dynamic graph."""
    dg = _load_graph(graph)
    ranges = genesis.split(dg, _fractions(split_fractions))
    rng = ranges[genesis.SPLITS[which]]
    loaded = {}
    for path in ckpts:
        for part in str(path).split(","):
            ck = trainer.Checkpoint.load(part)
            loaded[ck.cfg.variant.value] = ck
    names = [m.strip() for m in methods.split(",") if m.strip()]
    try:
        results = bench_mod.run_bench(dg, rng, names, loaded, None if oracle_limit <= 0 else oracle_limit,
                                      timing=not no_timing)
    except bench_mod.CheckpointMissing as exc:
        raise click.ClickException(f"method {exc.args[0]} needs a checkpoint (--ckpt)") from None
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    _write(out, bench_mod.emit_report(results, fmt))


if __name__ == "__main__":
    main()
