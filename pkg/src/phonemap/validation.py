"""Input validation helpers shared across estimators and functions."""

from __future__ import annotations

import numpy as np

__all__ = [
    "as_float_matrix",
    "as_float_array",
    "as_int_array",
    "check_finite",
    "check_fitted",
]


def as_float_matrix(x, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting anything else."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {arr.shape}")
    return arr


def as_float_array(x, name: str = "x") -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def as_int_array(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x)
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        rounded = np.rint(arr)
        if not np.allclose(arr, rounded):
            raise ValueError(f"{name} must contain integers")
        arr = rounded
    return arr.astype(np.int64)


def check_finite(x: np.ndarray, name: str = "array") -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def check_fitted(estimator, attribute: str) -> None:
    """Raise sklearn's NotFittedError if ``attribute`` is missing."""
    if not hasattr(estimator, attribute):
        from sklearn.exceptions import NotFittedError

        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )
