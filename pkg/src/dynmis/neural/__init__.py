"""Minimal differentiable layers: tape autodiff, GRU, MLP, Adam, checkpoints."""

from .adam import AdamState, adam_step
from .autodiff import DimensionMismatch, NonFiniteValue, Tensor, no_grad
from .layers import SIGNAL_DIM, Dims, ModelParams, gru, gru_cell, mlp

__all__ = [
    "AdamState",
    "adam_step",
    "DimensionMismatch",
    "NonFiniteValue",
    "Tensor",
    "no_grad",
    "SIGNAL_DIM",
    "Dims",
    "ModelParams",
    "gru",
    "gru_cell",
    "mlp",
]
