"""Tape-based reverse-mode differentiation over float64 numpy arrays.

Only the operations the update model needs are provided. Each op returns a
:class:`Tensor`; when any input requires a gradient (and recording is on)
the result remembers its parents and a closure that pushes its gradient
back to them.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np
from scipy.special import expit

_recording = True


class NonFiniteValue(FloatingPointError):
    """A NaN or infinity appeared in a loss or gradient."""


class DimensionMismatch(ValueError):
    pass


@contextmanager
def no_grad():
    global _recording
    prev = _recording
    _recording = False
    try:
        yield
    finally:
        _recording = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def backward(self):
        """Accumulate d(self)/d(leaf) into every reachable leaf's ``grad``."""
        if self.data.size != 1:
            raise ValueError("backward() needs a scalar output")
        if not np.isfinite(self.data).all():
            raise NonFiniteValue("non-finite loss")
        order = _topo(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
                if node._parents:
                    # interior gradients are not needed after propagation
                    node.grad = None
        for node in order:
            if node.grad is not None and not np.isfinite(node.grad).all():
                raise NonFiniteValue("non-finite gradient")

    __add__ = lambda self, other: add(self, other)
    __radd__ = lambda self, other: add(other, self)
    __mul__ = lambda self, other: mul(self, other)
    __rmul__ = lambda self, other: mul(other, self)
    __sub__ = lambda self, other: add(self, neg(as_tensor(other)))
    __rsub__ = lambda self, other: add(other, neg(self))
    __neg__ = lambda self: neg(self)


def _topo(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(data, parents, backward):
    out = Tensor(data)
    if _recording and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, dim in enumerate(shape):
        if dim == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def back(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.shape))

    return _result(a.data + b.data, (a, b), back)


def neg(a):
    a = as_tensor(a)
    return _result(-a.data, (a,), lambda g: a._accumulate(-g))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def back(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.shape))

    return _result(a.data * b.data, (a, b), back)


def linear(x, w, b=None):
    """``x @ w.T (+ b)`` for row-batched ``x`` of shape (batch, in)."""
    x, w = as_tensor(x), as_tensor(w)
    if x.data.shape[-1] != w.data.shape[1]:
        raise DimensionMismatch(f"input width {x.data.shape[-1]} vs weight {w.data.shape}")
    out = x.data @ w.data.T
    parents = [x, w]
    if b is not None:
        b = as_tensor(b)
        if b.data.shape != (w.data.shape[0],):
            raise DimensionMismatch(f"bias {b.data.shape} vs weight {w.data.shape}")
        out = out + b.data
        parents.append(b)

    def back(g):
        if x.requires_grad:
            x._accumulate(g @ w.data)
        if w.requires_grad:
            w._accumulate(g.T @ x.data)
        if b is not None and b.requires_grad:
            b._accumulate(g.sum(axis=0))

    return _result(out, parents, back)


def sigmoid(a):
    a = as_tensor(a)
    s = expit(a.data)
    return _result(s, (a,), lambda g: a._accumulate(g * s * (1.0 - s)))


def tanh(a):
    a = as_tensor(a)
    t = np.tanh(a.data)
    return _result(t, (a,), lambda g: a._accumulate(g * (1.0 - t * t)))


def relu(a):
    a = as_tensor(a)
    mask = a.data > 0
    return _result(np.where(mask, a.data, 0.0), (a,), lambda g: a._accumulate(g * mask))


def concat(parts, axis=1):
    parts = [as_tensor(p) for p in parts]
    sizes = [p.data.shape[axis] for p in parts]
    bounds = np.cumsum([0] + sizes)

    def back(g):
        for p, lo, hi in zip(parts, bounds[:-1], bounds[1:]):
            if p.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                p._accumulate(g[tuple(idx)])

    return _result(np.concatenate([p.data for p in parts], axis=axis), parts, back)


def gather_rows(a, rows):
    """``a[rows]`` (rows may repeat)."""
    a = as_tensor(a)
    rows = np.asarray(rows, dtype=np.intp)

    def back(g):
        full = np.zeros_like(a.data)
        np.add.at(full, rows, g)
        a._accumulate(full)

    return _result(a.data[rows], (a,), back)


def put_rows(base, rows, values):
    """Copy of ``base`` with ``base[rows] = values`` (rows distinct)."""
    base, values = as_tensor(base), as_tensor(values)
    rows = np.asarray(rows, dtype=np.intp)
    out = base.data.copy()
    out[rows] = values.data

    def back(g):
        if values.requires_grad:
            values._accumulate(g[rows])
        if base.requires_grad:
            gb = g.copy()
            gb[rows] = 0.0
            base._accumulate(gb)

    return _result(out, (base, values), back)


def spmm(matrix, a):
    """``matrix @ a`` for a constant (scipy sparse or dense) ``matrix``."""
    a = as_tensor(a)
    return _result(matrix @ a.data, (a,), lambda g: a._accumulate(matrix.T @ g))


def total(a):
    a = as_tensor(a)
    return _result(np.asarray(a.data.sum()), (a,), lambda g: a._accumulate(np.broadcast_to(g, a.shape)))


def reshape(a, shape):
    a = as_tensor(a)
    old = a.shape
    return _result(a.data.reshape(shape), (a,), lambda g: a._accumulate(g.reshape(old)))
