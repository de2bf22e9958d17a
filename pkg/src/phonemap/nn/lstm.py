"""LSTM cell and masked sequence runner with explicit backward passes.

The cell is the standard formulation: sigmoid input/forget/output gates,
tanh candidate and output squashing.  Gate blocks are packed in the order
(input, forget, candidate, output) along the last axis of the weights.

The sequence runner supports per-step binary masks for padded batches: a
masked step carries hidden and cell state through unchanged, so after the
last step the state of each sequence equals its state at its own final
valid frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LstmWeights", "lstm_step", "lstm_step_backward", "lstm_forward", "lstm_backward"]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


@dataclass
class LstmWeights:
    """Packed cell parameters: ``wx (Din, 4H)``, ``wh (H, 4H)``, ``b (4H,)``."""

    wx: np.ndarray
    wh: np.ndarray
    b: np.ndarray

    @property
    def hidden_size(self) -> int:
        return self.wh.shape[0]

    @property
    def input_size(self) -> int:
        return self.wx.shape[0]

    @classmethod
    def init(cls, input_size: int, hidden_size: int, rng: np.random.Generator) -> "LstmWeights":
        # Fan-in scaled uniform, the usual recurrent-net default.
        bound = 1.0 / np.sqrt(hidden_size)
        return cls(
            wx=rng.uniform(-bound, bound, (input_size, 4 * hidden_size)),
            wh=rng.uniform(-bound, bound, (hidden_size, 4 * hidden_size)),
            b=rng.uniform(-bound, bound, 4 * hidden_size),
        )

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> "LstmWeights":
        return cls(
            wx=np.zeros((input_size, 4 * hidden_size)),
            wh=np.zeros((hidden_size, 4 * hidden_size)),
            b=np.zeros(4 * hidden_size),
        )


def lstm_step(
    x: np.ndarray, h: np.ndarray, c: np.ndarray, weights: LstmWeights
) -> tuple[np.ndarray, np.ndarray, tuple]:
    """One cell update.  ``x (B, Din)``, ``h``/``c`` ``(B, H)``.

    Returns ``(h_next, c_next, cache)`` where the cache feeds
    :func:`lstm_step_backward`.
    """
    hs = weights.hidden_size
    if x.shape[-1] != weights.input_size or h.shape[-1] != hs or c.shape[-1] != hs:
        raise ValueError(
            f"lstm_step dimension mismatch: x{x.shape} h{h.shape} c{c.shape} "
            f"vs input_size={weights.input_size} hidden_size={hs}"
        )
    z = x @ weights.wx + h @ weights.wh + weights.b
    zi, zf, zg, zo = np.split(z, 4, axis=-1)
    i = _sigmoid(zi)
    f = _sigmoid(zf)
    g = np.tanh(zg)
    o = _sigmoid(zo)
    c_next = f * c + i * g
    tc = np.tanh(c_next)
    h_next = o * tc
    cache = (x, h, c, i, f, g, o, tc)
    return h_next, c_next, cache


def lstm_step_backward(
    dh_next: np.ndarray, dc_next: np.ndarray, cache: tuple, weights: LstmWeights
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Backward through one cell update.

    Returns ``(dx, dh, dc, dwx, dwh, db)``; parameter gradients are for this
    step only (caller accumulates across time).
    """
    x, h, c, i, f, g, o, tc = cache
    do = dh_next * tc
    dct = dc_next + dh_next * o * (1.0 - tc * tc)
    df = dct * c
    dc = dct * f
    di = dct * g
    dg = dct * i
    dz = np.concatenate(
        [di * i * (1.0 - i), df * f * (1.0 - f), dg * (1.0 - g * g), do * o * (1.0 - o)],
        axis=-1,
    )
    dx = dz @ weights.wx.T
    dh = dz @ weights.wh.T
    dwx = x.T @ dz
    dwh = h.T @ dz
    db = dz.sum(axis=0)
    return dx, dh, dc, dwx, dwh, db


def lstm_forward(
    xs: np.ndarray,
    mask: np.ndarray | None,
    weights: LstmWeights,
    h0: np.ndarray | None = None,
    c0: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list]:
    """Run the cell over ``xs (B, T, Din)`` with optional ``mask (B, T)``.

    Masked steps (mask 0) leave state untouched.  Returns
    ``(hs (B, T, H), h_last, c_last, caches)``.
    """
    b, t, _ = xs.shape
    hs_dim = weights.hidden_size
    h = np.zeros((b, hs_dim)) if h0 is None else h0
    c = np.zeros((b, hs_dim)) if c0 is None else c0
    hs = np.empty((b, t, hs_dim))
    caches = []
    for step in range(t):
        h_new, c_new, cache = lstm_step(xs[:, step, :], h, c, weights)
        if mask is not None:
            m = mask[:, step : step + 1]
            h = m * h_new + (1.0 - m) * h
            c = m * c_new + (1.0 - m) * c
            caches.append((cache, m))
        else:
            h, c = h_new, c_new
            caches.append((cache, None))
        hs[:, step, :] = h
    return hs, h, c, caches


def lstm_backward(
    dhs: np.ndarray | None,
    dh_last: np.ndarray | None,
    dc_last: np.ndarray | None,
    caches: list,
    weights: LstmWeights,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Backward through :func:`lstm_forward`.

    ``dhs`` is the per-step output gradient (or None), ``dh_last``/``dc_last``
    the gradients on the final carried state.  Returns
    ``(dxs, dwx, dwh, db, dh0, dc0)``.
    """
    t = len(caches)
    sample = caches[0][0]
    b = sample[0].shape[0]
    din = weights.input_size
    hs_dim = weights.hidden_size

    dxs = np.zeros((b, t, din))
    dwx = np.zeros_like(weights.wx)
    dwh = np.zeros_like(weights.wh)
    db = np.zeros_like(weights.b)
    dh = np.zeros((b, hs_dim)) if dh_last is None else dh_last.copy()
    dc = np.zeros((b, hs_dim)) if dc_last is None else dc_last.copy()

    for step in range(t - 1, -1, -1):
        if dhs is not None:
            dh = dh + dhs[:, step, :]
        cache, m = caches[step]
        if m is not None:
            dh_new = m * dh
            dc_new = m * dc
            dh_carry = (1.0 - m) * dh
            dc_carry = (1.0 - m) * dc
        else:
            dh_new, dc_new = dh, dc
            dh_carry = dc_carry = 0.0
        dx, dh_in, dc_in, swx, swh, sb = lstm_step_backward(dh_new, dc_new, cache, weights)
        dxs[:, step, :] = dx
        dwx += swx
        dwh += swh
        db += sb
        dh = dh_in + dh_carry
        dc = dc_in + dc_carry
    return dxs, dwx, dwh, db, dh, dc
