"""Central finite-difference verification of tape gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .autodiff import Tensor, no_grad

STEP = 1e-5
# Central differences at STEP carry round-off near 1e-16 * |f| / STEP, about
# 1e-10 for O(1) losses. Entries smaller than FLOOR are judged against FLOOR,
# i.e. they must agree to ~1e-10 absolute.
FLOOR = 1e-6


def analytic(fn: Callable[[dict[str, Tensor]], Tensor], arrays: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    leaves = {k: Tensor(v, requires_grad=True) for k, v in arrays.items()}
    fn(leaves).backward()
    return {k: (t.grad if t.grad is not None else np.zeros_like(t.data)) for k, t in leaves.items()}


def numeric(fn, arrays, step=STEP) -> dict[str, np.ndarray]:
    out = {}
    with no_grad():
        for name, arr in arrays.items():
            g = np.zeros_like(arr)
            flat = arr.reshape(-1)
            gflat = g.reshape(-1)
            for i in range(flat.size):
                keep = flat[i]
                flat[i] = keep + step
                hi = float(fn({k: Tensor(v) for k, v in arrays.items()}).data)
                flat[i] = keep - step
                lo = float(fn({k: Tensor(v) for k, v in arrays.items()}).data)
                flat[i] = keep
                gflat[i] = (hi - lo) / (2 * step)
            out[name] = g
    return out


def relative_errors(a: np.ndarray, b: np.ndarray, floor: float = FLOOR) -> np.ndarray:
    """|a - b| / max(|a|, |b|), with ``floor`` guarding entries where both vanish."""
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def max_relative_error(fn, arrays, step=STEP, floor: float = FLOOR) -> float:
    """Largest elementwise relative error between tape and finite differences."""
    ga = analytic(fn, arrays)
    gn = numeric(fn, arrays, step)
    return max((float(relative_errors(ga[k], gn[k], floor).max(initial=0.0)) for k in arrays), default=0.0)
