"""Learned update mechanism for MaxIS on dynamic graphs.

Per edge event the model

1. signals every node within ``alpha`` hops of the event (event kind plus a
   distance scaled into [-1, 1]) and updates its memory with a GRU;
2. recomputes the membership estimate of every node within ``beta`` hops
   from its own memory, its degree and the summed memories of its
   neighbors; other nodes keep their previous estimate;
3. during training, sums the local loss of the re-estimated nodes.

Integral solutions come from thresholding estimates at 0.5 and removing
violators.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse

from . import _kernels
from .dyngraph import EdgeEvent, Snapshot, apply_event, diameter, event_distances
from .neural import autodiff as ad
from .neural.layers import SIGNAL_DIM, Dims, ModelParams, gru, mlp


class DistanceOutOfRadius(ValueError):
    pass


class Variant(enum.Enum):
    BCAS = "bcas"
    NOCAS = "nocas"


@dataclass(frozen=True)
class Config:
    """Radii, loss constant, layer sizes and optimizer settings.

    Use :meth:`for_graph` to derive ``alpha``/``beta`` from diam(G_0):
    BCAS takes ``alpha = beta = max(1, round(gamma * diam))``; NoCAS takes
    ``alpha = 0`` and ``beta = diam``.
    """

    variant: Variant = Variant.BCAS
    alpha: int = 1
    beta: int = 1
    gamma: float = 0.25
    c: float = 3.0
    dims: Dims = field(default_factory=Dims)
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("hop radii must be non-negative")
        if self.c <= 0:
            raise ValueError("c must be positive")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")

    @staticmethod
    def radii(variant: Variant, gamma: float, diam: int) -> tuple[int, int]:
        if variant is Variant.BCAS:
            r = max(1, math.floor(gamma * diam + 0.5))
            return r, r
        return 0, diam

    @classmethod
    def for_graph(cls, g0: Snapshot, variant: Variant | str = Variant.BCAS, gamma: float = 0.25, **kw) -> "Config":
        variant = Variant(variant)
        alpha, beta = cls.radii(variant, gamma, diameter(g0))
        return cls(variant=variant, alpha=alpha, beta=beta, gamma=gamma, **kw)

    def resolved_for(self, g0: Snapshot) -> "Config":
        alpha, beta = self.radii(self.variant, self.gamma, diameter(g0))
        return replace(self, alpha=alpha, beta=beta)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "c": self.c,
            "dims": {
                "memory_dim": self.dims.memory_dim,
                "hidden_dim": self.dims.hidden_dim,
                "embed_dim": self.dims.embed_dim,
                "mlp_widths": list(self.dims.mlp_widths),
            },
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Config":
        d = dict(d)
        d["variant"] = Variant(d["variant"])
        d["dims"] = Dims(**d["dims"])
        return cls(**d)


@dataclass
class NodeState:
    memory: np.ndarray  # (n, memory_dim)
    estimate: np.ndarray  # (n,)

    @classmethod
    def zeros(cls, n: int, memory_dim: int) -> "NodeState":
        return cls(np.zeros((n, memory_dim)), np.zeros(n))

    def copy(self) -> "NodeState":
        return NodeState(self.memory.copy(), self.estimate.copy())


def encode_signal(e: EdgeEvent, dist: int, cfg: Config) -> np.ndarray:
    """``[1, 0, r]`` for additions, ``[0, 1, r]`` for deletions.

    ``r`` maps distance 0 to -1 and distance ``alpha`` to +1 linearly; with
    ``alpha = 0`` only endpoints are signalled and ``r = -1``.
    """
    return _signals(e, np.array([dist]), cfg.alpha)[0]


def _signals(e, dists, alpha):
    dists = np.asarray(dists, dtype=np.float64)
    if alpha == 0:
        if np.any(dists != 0):
            raise DistanceOutOfRadius("only endpoints carry a signal when alpha = 0")
        r = np.full(len(dists), -1.0)
    else:
        if np.any(dists > alpha) or np.any(dists < 0):
            raise DistanceOutOfRadius(f"distance outside [0, {alpha}]")
        r = 2.0 * dists / alpha - 1.0
    out = np.empty((len(dists), SIGNAL_DIM))
    out[:, 0] = 1.0 if e.is_add else 0.0
    out[:, 1] = 0.0 if e.is_add else 1.0
    out[:, 2] = r
    return out


def node_loss(p_v: float, neighbor_estimates, d_v: int, c: float) -> float:
    """-p_v + c / (2 d_v) * sum_u p_u p_v; the penalty is 0 for d_v = 0."""
    nb = list(neighbor_estimates)
    if len(nb) != d_v:
        raise ValueError("need one neighbor estimate per unit of degree")
    if d_v == 0:
        return -float(p_v)
    return -float(p_v) + c / (2.0 * d_v) * sum(float(p) * float(p_v) for p in nb)


@dataclass
class Neighborhood:
    """Index structures for re-estimating ``nodes``.

    ``local`` is ``nodes`` plus all their neighbors (sorted); ``agg`` is the
    |nodes| x |local| 0/1 adjacency used to sum neighbor rows.
    """

    nodes: np.ndarray
    local: np.ndarray
    pos: np.ndarray
    agg: sparse.csr_matrix
    degree: np.ndarray

    @classmethod
    def build(cls, s: Snapshot, nodes) -> "Neighborhood":
        nodes, local, indptr, cols, pos = _kernels.neighborhood(s.adj, nodes)
        agg = sparse.csr_matrix((np.ones(len(cols)), cols, indptr), shape=(len(nodes), len(local)))
        degree = np.diff(indptr).astype(np.float64)
        return cls(nodes, local, pos, agg, degree)


def estimate_forward(tp, depth: int, mem_local, nb: Neighborhood):
    """p = sigmoid(MLP(W2 [ReLU(W1 sum_nbr m) || m || d])) for ``nb.nodes``."""
    agg = ad.spmm(nb.agg, mem_local)
    ht = ad.relu(ad.linear(agg, tp["W1"]))
    own = ad.gather_rows(mem_local, nb.pos)
    h = ad.linear(ad.concat([ht, own, ad.Tensor(nb.degree[:, None])]), tp["W2"])
    return ad.sigmoid(ad.reshape(mlp(h, tp, depth), (-1,)))


def loss_forward(p_nodes, estimate: np.ndarray, nb: Neighborhood, c: float):
    """Sum of local losses over ``nb.nodes``; non-member neighbors use ``estimate``."""
    p_local = ad.put_rows(ad.Tensor(estimate[nb.local]), nb.pos, p_nodes)
    nsum = ad.spmm(nb.agg, p_local)
    with np.errstate(divide="ignore"):
        coef = np.where(nb.degree > 0, c / (2.0 * nb.degree), 0.0)
    return ad.total(ad.add(ad.neg(p_nodes), ad.mul(ad.Tensor(coef), ad.mul(p_nodes, nsum))))


@dataclass
class StepResult:
    memory_nodes: np.ndarray
    memory_values: np.ndarray
    estimate_nodes: np.ndarray
    estimate_values: np.ndarray
    loss: ad.Tensor | None

    def write(self, st: NodeState) -> None:
        st.memory[self.memory_nodes] = self.memory_values
        st.estimate[self.estimate_nodes] = self.estimate_values


def event_forward(tp, cfg: Config, st: NodeState, s: Snapshot, e: EdgeEvent, with_loss: bool = True) -> StepResult:
    """One event on the post-event snapshot ``s``; ``st`` is not modified.

    Memories from earlier steps enter as constants, so gradients reach
    the weights through this event's GRU and aggregation only.
    """
    near_a = event_distances(s, e, cfg.alpha)
    a_nodes = np.array(sorted(near_a), dtype=np.intp)
    h = st.memory[a_nodes]
    sig = _signals(e, [near_a[v] for v in a_nodes.tolist()], cfg.alpha)
    m_new = gru(ad.Tensor(np.concatenate([h, sig], axis=1)), ad.Tensor(h), tp)

    near_b = near_a if cfg.beta == cfg.alpha else event_distances(s, e, cfg.beta)
    nb = Neighborhood.build(s, near_b)
    mem_local = ad.Tensor(st.memory[nb.local])
    if len(a_nodes):
        at = np.searchsorted(nb.local, a_nodes)
        inside = (at < len(nb.local)) & (nb.local[np.minimum(at, len(nb.local) - 1)] == a_nodes)
        if inside.all():
            mem_local = ad.put_rows(mem_local, at, m_new)
        elif inside.any():
            mem_local = ad.put_rows(mem_local, at[inside], ad.gather_rows(m_new, np.flatnonzero(inside)))
    p = estimate_forward(tp, len(cfg.dims.mlp_widths), mem_local, nb)
    loss = loss_forward(p, st.estimate, nb, cfg.c) if with_loss else None
    return StepResult(a_nodes, m_new.data, nb.nodes, p.data, loss)


def _const(params: ModelParams):
    return params.leaves(requires_grad=False)


def update_memories(st: NodeState, s: Snapshot, e: EdgeEvent, params: ModelParams, cfg: Config) -> NodeState:
    """GRU-update every node within ``alpha`` hops of ``e`` (``s`` is post-event)."""
    near = event_distances(s, e, cfg.alpha)
    nodes = np.array(sorted(near), dtype=np.intp)
    h = st.memory[nodes]
    sig = _signals(e, [near[v] for v in nodes.tolist()], cfg.alpha)
    with ad.no_grad():
        m_new = gru(ad.Tensor(np.concatenate([h, sig], axis=1)), ad.Tensor(h), _const(params))
    out = st.copy()
    out.memory[nodes] = m_new.data
    return out


def compute_estimates(st: NodeState, s: Snapshot, affected, params: ModelParams) -> NodeState:
    """Recompute estimates of ``affected`` from current memories; others retained."""
    out = st.copy()
    if not len(affected):
        return out
    nb = Neighborhood.build(s, affected)
    with ad.no_grad():
        p = estimate_forward(_const(params), len(params.dims.mlp_widths), ad.Tensor(st.memory[nb.local]), nb)
    out.estimate[nb.nodes] = p.data
    return out


def cumulative_loss(st: NodeState, s: Snapshot, affected, c: float) -> float:
    """Sum of local losses over ``affected`` using the estimates in ``st``."""
    if not len(affected):
        return 0.0
    nb = Neighborhood.build(s, affected)
    with ad.no_grad():
        return float(loss_forward(ad.Tensor(st.estimate[nb.nodes]), st.estimate, nb, c).data)


class DependentSetError(AssertionError):
    pass


def round_solution(st: NodeState, s: Snapshot) -> frozenset:
    """Threshold estimates at 0.5, then remove violators until independent.

    Removal order: most in-candidate neighbors first, then lower estimate,
    then larger node id.
    """
    est = np.ascontiguousarray(st.estimate, dtype=np.float64)
    members = frozenset(_kernels.round_estimates(s.adj, est))
    if not _kernels.is_independent(s.adj, members):
        raise DependentSetError("rounding produced a dependent set")
    return members


def build_memories(tp, n: int, edges, memory_dim: int):
    """Memories after adding ``edges`` one at a time to an empty graph.

    Only the two endpoints of each addition are updated (distance 0 signal).
    Returns an ``(n, memory_dim)`` tensor; gradients flow through the
    whole construction when ``tp`` requires them.
    """
    if n == 0:
        return ad.Tensor(np.zeros((0, memory_dim)))
    zero = ad.Tensor(np.zeros((1, memory_dim)))
    rows = [zero] * n
    sig = ad.Tensor(_signals(EdgeEvent.add(0, 1), [0, 0], 0))
    for u, w in edges:
        h = ad.concat([rows[u], rows[w]], axis=0)
        m_new = gru(ad.concat([h, sig], axis=1), h, tp)
        rows[u] = ad.gather_rows(m_new, [0])
        rows[w] = ad.gather_rows(m_new, [1])
    return ad.concat(rows, axis=0)


def full_estimates(tp, cfg: Config, memory, s: Snapshot):
    """Estimates for every node plus the loss summed over all of them."""
    nb = Neighborhood.build(s, range(s.n))
    p = estimate_forward(tp, len(cfg.dims.mlp_widths), memory, nb)
    return p, loss_forward(p, np.zeros(s.n), nb, cfg.c)


class Engine:
    """Stateful inference over an event stream."""

    def __init__(self, params: ModelParams, cfg: Config, snapshot: Snapshot, state: NodeState):
        params.check()
        if state.memory.shape != (snapshot.n, cfg.dims.memory_dim):
            raise ValueError("node state does not match snapshot/config")
        self.params = params
        self.cfg = cfg
        self.snapshot = snapshot
        self.state = state
        self._tp = _const(params)

    @classmethod
    def warm_start(cls, params: ModelParams, cfg: Config, g0: Snapshot, edge_order=None) -> "Engine":
        """Build memories and estimates for ``g0`` by replaying its edges."""
        edges = list(g0.edges()) if edge_order is None else list(edge_order)
        tp = _const(params)
        with ad.no_grad():
            mem = build_memories(tp, g0.n, edges, cfg.dims.memory_dim)
            p, _ = full_estimates(tp, cfg, mem, g0)
        return cls(params, cfg, g0, NodeState(mem.data.copy(), p.data.copy()))

    def step(self, e: EdgeEvent) -> StepResult:
        self.snapshot = apply_event(self.snapshot, e)
        with ad.no_grad():
            res = event_forward(self._tp, self.cfg, self.state, self.snapshot, e, with_loss=False)
        res.write(self.state)
        return res

    def solution(self) -> frozenset:
        return round_solution(self.state, self.snapshot)
