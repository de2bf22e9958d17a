"""Parameters and the Adam update rule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Parameter", "AdamState", "adam_update", "AdamOptimizer"]

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class Parameter:
    """A trainable tensor with an accumulated gradient of the same shape."""

    value: np.ndarray
    grad: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.value = np.asarray(self.value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    def zero_grad(self) -> None:
        self.grad[...] = 0.0


@dataclass
class AdamState:
    """First/second moment estimates and the step counter for one parameter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPS

    @classmethod
    def for_parameter(
        cls,
        param: Parameter,
        beta1: float = ADAM_BETA1,
        beta2: float = ADAM_BETA2,
        epsilon: float = ADAM_EPS,
    ) -> "AdamState":
        return cls(
            m=np.zeros_like(param.value),
            v=np.zeros_like(param.value),
            beta1=beta1,
            beta2=beta2,
            epsilon=epsilon,
        )


def adam_update(param: Parameter, state: AdamState, lr: float) -> None:
    """Apply one bias-corrected Adam step in place.

    Rejects non-finite gradients, which signal diverged training rather
    than a recoverable condition.
    """
    if not np.all(np.isfinite(param.grad)):
        raise FloatingPointError("adam_update: non-finite gradient (training diverged?)")
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * param.grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * param.grad**2
    m_hat = state.m / (1.0 - state.beta1**state.t)
    v_hat = state.v / (1.0 - state.beta2**state.t)
    param.value -= lr * m_hat / (np.sqrt(v_hat) + state.epsilon)


class AdamOptimizer:
    """Adam over a list of parameters, one shared learning rate."""

    def __init__(
        self,
        params: list[Parameter],
        lr: float,
        beta1: float = ADAM_BETA1,
        beta2: float = ADAM_BETA2,
        epsilon: float = ADAM_EPS,
    ):
        self.params = params
        self.lr = lr
        self.states = [AdamState.for_parameter(p, beta1, beta2, epsilon) for p in params]

    def zero_grads(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        for p, s in zip(self.params, self.states):
            adam_update(p, s, self.lr)
