"""Finite-difference gradient verification."""

from __future__ import annotations

from typing import Callable

import numpy as np

__all__ = ["numerical_gradient", "max_relative_error", "grad_check"]


def numerical_gradient(
    f: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient of scalar ``f`` at ``x``, componentwise."""
    if not h > 0:
        raise ValueError(f"h must be > 0, got {h}")
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + h
        fp = f(x)
        flat[k] = orig - h
        fm = f(x)
        flat[k] = orig
        gflat[k] = (fp - fm) / (2.0 * h)
    return grad


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Worst-case deviation, scaled by the larger gradient magnitude.

    ``max|a - n| / max(max|a|, max|n|, 1e-12)``: a single global scale so
    that components whose true gradient happens to be ~0 do not inflate
    the error with finite-difference noise.
    """
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    diff = float(np.max(np.abs(analytic - numeric))) if analytic.size else 0.0
    scale = max(
        float(np.max(np.abs(analytic))) if analytic.size else 0.0,
        float(np.max(np.abs(numeric))) if numeric.size else 0.0,
        1e-12,
    )
    return diff / scale


def grad_check(
    f: Callable[[np.ndarray], float],
    grad_f: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    h: float = 1e-5,
) -> float:
    """Max relative error between ``grad_f(x)`` and central differences of ``f``."""
    analytic = grad_f(x)
    numeric = numerical_gradient(f, x, h=h)
    if analytic.shape != numeric.shape:
        raise ValueError(
            f"grad_check shape mismatch: analytic {analytic.shape} vs x {numeric.shape}"
        )
    return max_relative_error(analytic, numeric)
