"""Adam with bias-corrected moments."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import DimensionMismatch


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], st: AdamState):
    """Update ``params`` in place; returns ``(params, st)``.

    Parameters without an entry in ``grads`` are treated as having zero
    gradient (their moments still decay).
    """
    st.step += 1
    t = st.step
    c1 = 1.0 - st.beta1**t
    c2 = 1.0 - st.beta2**t
    for name, w in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(w)
        elif g.shape != w.shape:
            raise DimensionMismatch(f"{name}: grad {g.shape} vs param {w.shape}")
        m = st.m.get(name)
        if m is None:
            m = st.m[name] = np.zeros_like(w)
            st.v[name] = np.zeros_like(w)
        v = st.v[name]
        m *= st.beta1
        m += (1.0 - st.beta1) * g
        v *= st.beta2
        v += (1.0 - st.beta2) * g * g
        w -= st.lr * (m / c1) / (np.sqrt(v / c2) + st.eps)
    return params, st
