"""Elementary layers with explicit forward and backward passes.

Everything operates on float64 ndarrays.  Each ``<op>`` has a matching
``<op>_backward`` that maps the gradient of a scalar loss with respect
to the op's output back to gradients with respect to its inputs, so no
computation-graph machinery is needed and every layer can be checked
against finite differences in isolation.

Shape conventions:

* vectors are 1-D arrays; batched vectors stack along axis 0;
* sequences are ``(T, C)`` arrays (time, channels); batched sequences
  are ``(B, T, C)``;
* conv kernels are ``(width, in_channels, out_channels)``.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .rng import gumbel_noise

__all__ = [
    "softmax",
    "softmax_backward",
    "gumbel_softmax",
    "gumbel_softmax_backward",
    "leaky_relu",
    "leaky_relu_backward",
    "affine",
    "affine_backward",
    "conv1d",
    "conv1d_backward",
]


def _check_finite(name: str, x: np.ndarray) -> None:
    if not np.all(np.isfinite(x)):
        bad = int(np.size(x) - np.count_nonzero(np.isfinite(x)))
        raise ValueError(f"{name} contains {bad} non-finite value(s)")


# ---------------------------------------------------------------------------
# softmax / gumbel-softmax


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Probability simplex projection of ``logits`` along ``axis``.

    Invariant under adding a constant to the logits; rows sum to 1.
    """
    logits = np.asarray(logits, dtype=np.float64)
    _check_finite("softmax input", logits)
    shifted = logits - np.max(logits, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def softmax_backward(grad_out: np.ndarray, probs: np.ndarray, axis: int = -1) -> np.ndarray:
    """Map d(loss)/d(probs) to d(loss)/d(logits)."""
    inner = np.sum(grad_out * probs, axis=axis, keepdims=True)
    return probs * (grad_out - inner)


def gumbel_softmax(
    logits: np.ndarray, inv_temp: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Sample a relaxed categorical draw along the last axis.

    Returns ``(soft, hard)``: ``soft`` is ``softmax(inv_temp * (logits + g))``
    with standard Gumbel noise ``g``; ``hard`` is the exact one-hot vector at
    ``argmax(soft)``.  In the straight-through scheme the hard vector is used
    as the forward value while gradients are routed through ``soft`` (see
    :func:`gumbel_softmax_backward`).
    """
    if not inv_temp > 0:
        raise ValueError(f"inv_temp must be > 0, got {inv_temp}")
    logits = np.asarray(logits, dtype=np.float64)
    noisy = inv_temp * (logits + gumbel_noise(rng, logits.shape))
    soft = softmax(noisy, axis=-1)
    hard = np.zeros_like(soft)
    idx = np.argmax(soft, axis=-1)
    np.put_along_axis(hard, idx[..., None], 1.0, axis=-1)
    return soft, hard


def gumbel_softmax_backward(
    grad_hard: np.ndarray, soft: np.ndarray, inv_temp: float
) -> np.ndarray:
    """Straight-through estimator: copy the hard-output gradient onto the
    soft sample and push it through the softmax jacobian."""
    return inv_temp * softmax_backward(grad_hard, soft, axis=-1)


# ---------------------------------------------------------------------------
# leaky ReLU


def leaky_relu(x: np.ndarray, slope: float = 0.01) -> np.ndarray:
    """Elementwise ``x if x >= 0 else slope * x`` with ``slope`` in (0, 1)."""
    if not 0.0 < slope < 1.0:
        raise ValueError(f"slope must be in (0, 1), got {slope}")
    x = np.asarray(x, dtype=np.float64)
    _check_finite("leaky_relu input", x)
    return np.where(x >= 0.0, x, slope * x)


def leaky_relu_backward(grad_out: np.ndarray, x: np.ndarray, slope: float = 0.01) -> np.ndarray:
    return grad_out * np.where(x >= 0.0, 1.0, slope)


# ---------------------------------------------------------------------------
# affine


def affine(x: np.ndarray, weight: np.ndarray, bias: np.ndarray | None = None) -> np.ndarray:
    """``x @ weight + bias`` over the last axis of ``x``."""
    if x.shape[-1] != weight.shape[0]:
        raise ValueError(
            f"affine shape mismatch: input has {x.shape[-1]} features, "
            f"weight expects {weight.shape[0]}"
        )
    y = x @ weight
    if bias is not None:
        y = y + bias
    return y


def affine_backward(
    grad_out: np.ndarray, x: np.ndarray, weight: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(dx, dweight, dbias)``."""
    dx = grad_out @ weight.T
    gflat = grad_out.reshape(-1, grad_out.shape[-1])
    xflat = x.reshape(-1, x.shape[-1])
    dweight = xflat.T @ gflat
    dbias = gflat.sum(axis=0)
    return dx, dweight, dbias


# ---------------------------------------------------------------------------
# 1-D convolution (cross-correlation)


def _conv_windows(xp: np.ndarray, width: int) -> np.ndarray:
    # (B, Tp, Cin) -> (B, Tp - width + 1, width * Cin), window-major taps
    v = sliding_window_view(xp, width, axis=1)  # (B, T2, Cin, width)
    v = v.transpose(0, 1, 3, 2)  # (B, T2, width, Cin)
    b, t2 = v.shape[0], v.shape[1]
    return v.reshape(b, t2, width * xp.shape[2])


def _pad_amounts(width: int, padding: str, t: int) -> tuple[int, int]:
    if padding == "same":
        if width % 2 == 0:
            raise ValueError(f"'same' padding requires an odd kernel width, got {width}")
        p = width // 2
        return p, p
    if padding == "valid":
        if t < width:
            raise ValueError(f"'valid' conv needs T >= width, got T={t}, width={width}")
        return 0, 0
    raise ValueError(f"padding must be 'same' or 'valid', got {padding!r}")


def conv1d(
    x: np.ndarray,
    kernels: np.ndarray,
    padding: str = "same",
    bias: np.ndarray | None = None,
) -> np.ndarray:
    """Cross-correlate a sequence with a bank of kernels.

    ``x`` is ``(T, Cin)`` or ``(B, T, Cin)``; ``kernels`` is
    ``(width, Cin, Cout)``.  ``same`` zero-pads to preserve T (odd width
    only); ``valid`` yields ``T - width + 1`` steps.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 2
    xb = x[None] if single else x
    if xb.ndim != 3 or kernels.ndim != 3:
        raise ValueError(
            f"conv1d expects x (B,T,Cin) and kernels (w,Cin,Cout); "
            f"got x{x.shape} kernels{kernels.shape}"
        )
    width, cin, cout = kernels.shape
    if xb.shape[2] != cin:
        raise ValueError(
            f"conv1d channel mismatch: input has {xb.shape[2]} channels, "
            f"kernels expect {cin}"
        )
    lo, hi = _pad_amounts(width, padding, xb.shape[1])
    xp = np.pad(xb, ((0, 0), (lo, hi), (0, 0))) if lo or hi else xb
    win = _conv_windows(xp, width)
    y = win.reshape(-1, width * cin) @ kernels.reshape(width * cin, cout)
    y = y.reshape(xb.shape[0], -1, cout)
    if bias is not None:
        y = y + bias
    return y[0] if single else y


def conv1d_backward(
    grad_out: np.ndarray,
    x: np.ndarray,
    kernels: np.ndarray,
    padding: str = "same",
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(dx, dkernels, dbias)`` for :func:`conv1d`."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 2
    xb = x[None] if single else x
    gb = grad_out[None] if single else grad_out
    width, cin, cout = kernels.shape
    lo, hi = _pad_amounts(width, padding, xb.shape[1])
    xp = np.pad(xb, ((0, 0), (lo, hi), (0, 0))) if lo or hi else xb

    win = _conv_windows(xp, width)
    gflat = gb.reshape(-1, cout)
    dkernels = (win.reshape(-1, width * cin).T @ gflat).reshape(width, cin, cout)
    dbias = gflat.sum(axis=0)

    # Gradient w.r.t. the padded input is a 'valid' correlation of the
    # zero-extended output gradient with the tap-reversed kernels.
    gpad = np.pad(gb, ((0, 0), (width - 1, width - 1), (0, 0)))
    kt = np.ascontiguousarray(kernels[::-1].transpose(0, 2, 1))  # (w, Cout, Cin)
    gwin = _conv_windows(gpad, width)
    dxp = gwin.reshape(-1, width * cout) @ kt.reshape(width * cout, cin)
    dxp = dxp.reshape(xb.shape[0], -1, cin)
    dx = dxp[:, lo : lo + xb.shape[1], :] if lo or hi else dxp
    return (dx[0] if single else dx), dkernels, dbias
