"""Parameter containers and the layers of the update model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import (
    DimensionMismatch,
    Tensor,
    add,
    concat,
    linear,
    mul,
    no_grad,
    relu,
    sigmoid,
    tanh,
)

SIGNAL_DIM = 3
GRU_GATES = ("z", "r", "n")


@dataclass(frozen=True)
class Dims:
    memory_dim: int = 32
    hidden_dim: int = 32
    embed_dim: int = 32
    mlp_widths: tuple[int, ...] = (16, 1)

    def __post_init__(self):
        object.__setattr__(self, "mlp_widths", tuple(int(w) for w in self.mlp_widths))
        chain = (self.embed_dim,) + self.mlp_widths
        if not self.mlp_widths or self.mlp_widths[-1] != 1:
            raise ValueError("MLP must end in width 1")
        if any(b >= a for a, b in zip(chain, chain[1:])):
            raise ValueError(f"MLP widths must step down, got {chain}")

    @property
    def gru_input(self) -> int:
        return self.memory_dim + SIGNAL_DIM


@dataclass
class ModelParams:
    """All learnable weights as a flat, ordered name -> array mapping.

    Names: ``gru.W_{z,r,n}`` (memory x memory+3), ``gru.U_{z,r,n}``
    (memory x memory), ``gru.b_{z,r,n}``, ``W1`` (hidden x memory), ``W2``
    (embed x hidden+memory+1), and ``mlp.{i}.W`` / ``mlp.{i}.b``.
    """

    dims: Dims
    arrays: dict[str, np.ndarray] = field(default_factory=dict)

    @staticmethod
    def shapes(dims: Dims) -> list[tuple[str, tuple[int, ...]]]:
        m = dims.memory_dim
        out = []
        for g in GRU_GATES:
            out.append((f"gru.W_{g}", (m, dims.gru_input)))
        for g in GRU_GATES:
            out.append((f"gru.U_{g}", (m, m)))
        for g in GRU_GATES:
            out.append((f"gru.b_{g}", (m,)))
        out.append(("W1", (dims.hidden_dim, m)))
        out.append(("W2", (dims.embed_dim, dims.hidden_dim + m + 1)))
        width = dims.embed_dim
        for i, w in enumerate(dims.mlp_widths):
            out.append((f"mlp.{i}.W", (w, width)))
            out.append((f"mlp.{i}.b", (w,)))
            width = w
        return out

    @classmethod
    def init(cls, dims: Dims, rng: np.random.Generator) -> "ModelParams":
        """Uniform(-k, k), k = 1/sqrt(fan_in) for matrices; zero biases."""
        arrays = {}
        for name, shape in cls.shapes(dims):
            if len(shape) == 1:
                arrays[name] = np.zeros(shape)
            else:
                k = 1.0 / np.sqrt(shape[1])
                arrays[name] = rng.uniform(-k, k, size=shape)
        return cls(dims, arrays)

    @classmethod
    def zeros(cls, dims: Dims) -> "ModelParams":
        return cls(dims, {name: np.zeros(shape) for name, shape in cls.shapes(dims)})

    def copy(self) -> "ModelParams":
        return ModelParams(self.dims, {k: v.copy() for k, v in self.arrays.items()})

    def __getitem__(self, name):
        return self.arrays[name]

    def leaves(self, requires_grad=True) -> dict[str, Tensor]:
        return {k: Tensor(v, requires_grad=requires_grad) for k, v in self.arrays.items()}

    def check(self):
        for name, shape in self.shapes(self.dims):
            got = self.arrays[name].shape
            if got != shape:
                raise DimensionMismatch(f"{name}: expected {shape}, got {got}")


def gru(x, h, p):
    """Batched GRU step; ``p`` maps ``gru.*`` names to tensors.

    z = sig(W_z x + U_z h + b_z), r = sig(W_r x + U_r h + b_r),
    n = tanh(W_n x + r * (U_n h) + b_n), h' = (1 - z) * n + z * h.
    """
    z = sigmoid(add(linear(x, p["gru.W_z"], p["gru.b_z"]), linear(h, p["gru.U_z"])))
    r = sigmoid(add(linear(x, p["gru.W_r"], p["gru.b_r"]), linear(h, p["gru.U_r"])))
    n = tanh(add(linear(x, p["gru.W_n"], p["gru.b_n"]), mul(r, linear(h, p["gru.U_n"]))))
    return add(mul(add(1.0, -z), n), mul(z, h))


def gru_cell(x, h, params) -> np.ndarray:
    """Single (or row-batched) GRU update on plain arrays."""
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    single = x.ndim == 1
    x2, h2 = np.atleast_2d(x), np.atleast_2d(h)
    arrays = params.arrays if isinstance(params, ModelParams) else params
    m = arrays["gru.U_z"].shape[0]
    if h2.shape[1] != m or x2.shape[1] != arrays["gru.W_z"].shape[1] or x2.shape[0] != h2.shape[0]:
        raise DimensionMismatch(f"x {x.shape}, h {h.shape} vs memory dim {m}")
    with no_grad():
        out = gru(Tensor(x2), Tensor(h2), {k: Tensor(v) for k, v in arrays.items() if k.startswith("gru.")}).data
    return out[0] if single else out


def mlp(x, p, depth):
    """Step-down MLP: ReLU between layers, raw logit out."""
    for i in range(depth):
        x = linear(x, p[f"mlp.{i}.W"], p[f"mlp.{i}.b"])
        if i < depth - 1:
            x = relu(x)
    return x
