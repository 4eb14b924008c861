"""Time the compiled and pure-Python graph kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--n 100] [--p 0.05] [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from dynmis import _kernels
from dynmis.genesis import ER, GenSpec, gen_initial


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--p", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--exact-limit", type=float, default=30.0)
    args = ap.parse_args(argv)

    if _kernels.cython is None:
        raise SystemExit("compiled kernels not built; run `python3 setup.py build_ext --inplace`")
    s = gen_initial(GenSpec(ER(args.p), args.n, seed=args.seed))
    adj = s.adj
    est = np.random.default_rng(args.seed).random(s.n)
    ball = list(range(0, s.n, 4))
    cases = {
        "diameter": lambda k: k.diameter(adj),
        "greedy_mis": lambda k: k.greedy_mis(adj),
        "round_estimates": lambda k: k.round_estimates(adj, est),
        "neighborhood": lambda k: k.neighborhood(adj, ball)[1].tolist(),
        "hop_distances": lambda k: k.hop_distances(adj, [0], 3),
        "exact_mis": lambda k: k.exact_mis(adj, args.exact_limit),
    }
    print(f"ER n={s.n} m={s.edge_count}, best of {args.repeat}")
    print(f"{'kernel':<16}{'cython (s)':>12}{'python (s)':>12}{'speedup':>10}  same")
    for name, call in cases.items():
        tc, oc = best_of(lambda: call(_kernels.cython), args.repeat)
        tp, op = best_of(lambda: call(_kernels.python), 1 if name == "exact_mis" else args.repeat)
        print(f"{name:<16}{tc:>12.6f}{tp:>12.6f}{tp / max(tc, 1e-12):>10.1f}  {oc == op}")


if __name__ == "__main__":
    main()
