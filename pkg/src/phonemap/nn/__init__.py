"""Minimal deterministic numerical kernel: float64 layers with explicit
forward/backward passes, Adam, seeded RNG, and gradient checking."""

from .adam import AdamOptimizer, AdamState, Parameter, adam_update
from .gradcheck import grad_check, max_relative_error, numerical_gradient
from .lstm import LstmWeights, lstm_backward, lstm_forward, lstm_step, lstm_step_backward
from .ops import (
    affine,
    affine_backward,
    conv1d,
    conv1d_backward,
    gumbel_softmax,
    gumbel_softmax_backward,
    leaky_relu,
    leaky_relu_backward,
    softmax,
    softmax_backward,
)
from .rng import derive_seed, gumbel_noise, new_rng

__all__ = [
    "AdamOptimizer",
    "AdamState",
    "Parameter",
    "adam_update",
    "grad_check",
    "max_relative_error",
    "numerical_gradient",
    "LstmWeights",
    "lstm_backward",
    "lstm_forward",
    "lstm_step",
    "lstm_step_backward",
    "affine",
    "affine_backward",
    "conv1d",
    "conv1d_backward",
    "gumbel_softmax",
    "gumbel_softmax_backward",
    "leaky_relu",
    "leaky_relu_backward",
    "softmax",
    "softmax_backward",
    "derive_seed",
    "gumbel_noise",
    "new_rng",
]
