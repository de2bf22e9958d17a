"""Adversarial cluster-to-phoneme mapping.

The generator is a K x L lookup table: row k holds the logits of cluster
k over the L phonemes, and a cluster-index sequence maps to a sequence of
phoneme distributions (softmax rows) or straight-through one-hot samples
(gumbel rows).  The critic is a two-layer 1-D CNN over phoneme-vector
sequences scored against one-hot sequences derived from text, trained
with the gradient-penalty Wasserstein objective: 3 critic updates per
table update, penalty weight 10.

Masking convention: every layer's activations are multiplied by the
validity mask, so appending masked positions to a batch never changes
the critic's output and padded rows carry no gradient.

On-disk formats: trained mapping is JSON
``{"k", "l", "e", "phoneme_names"}``; the training log is CSV with
header ``iteration,d_loss,g_loss,gp,probe_accuracy``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from .nn.adam import AdamOptimizer, Parameter
from .nn.ops import (
    conv1d,
    conv1d_backward,
    gumbel_softmax,
    gumbel_softmax_backward,
    leaky_relu,
    leaky_relu_backward,
    softmax,
    softmax_backward,
)
from .nn.rng import derive_seed, new_rng
from .validation import as_int_array, check_fitted

__all__ = [
    "LookupTable",
    "PhonemeVectorSequence",
    "Discriminator",
    "LinearCritic",
    "GanConfig",
    "TrainingLogRow",
    "generate",
    "discriminate",
    "gradient_penalty",
    "d_loss",
    "g_loss",
    "train",
    "decode",
    "PhonemeMapperGan",
    "read_mapping",
    "write_mapping",
    "read_training_log",
    "write_training_log",
    "read_decoded",
    "write_decoded",
]


# ---------------------------------------------------------------------------
# generator: the lookup table


@dataclass
class LookupTable:
    """K x L logits; row k is cluster k's unnormalized phoneme scores."""

    e: np.ndarray

    @property
    def k(self) -> int:
        return self.e.shape[0]

    @property
    def l(self) -> int:
        return self.e.shape[1]

    @classmethod
    def init(cls, k: int, l: int, rng: np.random.Generator, scale: float = 0.1) -> "LookupTable":
        # small logits keep early softmax rows near uniform
        return cls(e=scale * rng.normal(size=(k, l)))


@dataclass
class PhonemeVectorSequence:
    """Rows of phoneme distributions or one-hots; mask flags valid rows."""

    vectors: np.ndarray
    mask: np.ndarray | None = None


def _check_indices(c_seq: np.ndarray, k: int) -> np.ndarray:
    c = as_int_array(c_seq, "cluster indices")
    if c.size and (c.min() < 1 or c.max() > k):
        raise ValueError(
            f"cluster indices must lie in [1, {k}], got range [{c.min()}, {c.max()}]"
        )
    return c


def generate(
    c_seq: np.ndarray,
    table: LookupTable,
    mode: str = "softmax",
    rng: np.random.Generator | None = None,
    inv_temp: float = 0.9,
) -> PhonemeVectorSequence:
    """Map a cluster-index sequence to a phoneme-vector sequence.

    ``softmax`` mode emits the softmax of the indexed table row, so equal
    indices give identical rows; ``gumbel`` mode emits straight-through
    one-hot samples.
    """
    c = _check_indices(c_seq, table.k)
    logits = table.e[c - 1]
    if mode == "softmax":
        return PhonemeVectorSequence(vectors=softmax(logits, axis=-1))
    if mode == "gumbel":
        if rng is None:
            raise ValueError("gumbel mode needs an rng")
        _, hard = gumbel_softmax(logits, inv_temp, rng)
        return PhonemeVectorSequence(vectors=hard)
    raise ValueError(f"mode must be 'softmax' or 'gumbel', got {mode!r}")


def decode(c_seq: np.ndarray, table: LookupTable) -> np.ndarray:
    """Most likely phoneme id per position; ties go to the lowest id."""
    c = _check_indices(c_seq, table.k)
    return np.argmax(table.e[c - 1], axis=-1)


def _generate_windows(
    c_win: np.ndarray,
    mask: np.ndarray,
    e: np.ndarray,
    mode: str,
    rng: np.random.Generator | None,
    inv_temp: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Batched generation over (B, T) index windows; masked rows are zero.

    Returns ``(rows, soft)`` where ``soft`` carries the backward path.
    """
    logits = e[np.maximum(c_win - 1, 0)]
    soft = softmax(logits, axis=-1)
    if mode == "softmax":
        rows = soft
    else:
        gsoft, hard = gumbel_softmax(logits, inv_temp, rng)
        rows, soft = hard, gsoft
    m = mask[..., None]
    return rows * m, soft


def _generate_backward(
    drows: np.ndarray,
    soft: np.ndarray,
    c_win: np.ndarray,
    mask: np.ndarray,
    mode: str,
    inv_temp: float,
    k: int,
) -> np.ndarray:
    """Accumulate window-row gradients into a K x L table gradient."""
    drows = drows * mask[..., None]
    if mode == "softmax":
        dlogits = softmax_backward(drows, soft, axis=-1)
    else:
        dlogits = gumbel_softmax_backward(drows, soft, inv_temp)
    de = np.zeros((k, soft.shape[-1]))
    np.add.at(de, np.maximum(c_win - 1, 0), dlogits)
    return de


# ---------------------------------------------------------------------------
# critic


def _fan_in_uniform(rng: np.random.Generator, shape: tuple, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, shape)


class Discriminator:
    """Two-layer 1-D CNN critic over phoneme-vector sequences.

    Layer 1 runs parallel convolutions of widths 3/5/7/9 and concatenates
    their channels; layer 2 is a width-3 convolution over the concatenated
    channels; a masked mean-pool and a linear head produce the scalar.
    Activations are multiplied by the validity mask after every layer.
    """

    WIDTHS = (3, 5, 7, 9)

    def __init__(self, l: int, channels: int = 8, leak: float = 0.2, seed: int = 0):
        self.l = l
        self.channels = channels
        self.leak = leak
        rng = new_rng(seed)
        c2 = channels * len(self.WIDTHS)
        self.kernels1 = [
            Parameter(_fan_in_uniform(rng, (w, l, channels), w * l)) for w in self.WIDTHS
        ]
        self.bias1 = [Parameter(np.zeros(channels)) for _ in self.WIDTHS]
        self.kernels2 = Parameter(_fan_in_uniform(rng, (3, c2, c2), 3 * c2))
        self.bias2 = Parameter(np.zeros(c2))
        self.head_w = Parameter(_fan_in_uniform(rng, (c2,), c2))
        self.head_b = Parameter(np.zeros(1))

    def parameters(self) -> list[Parameter]:
        return [
            *self.kernels1,
            *self.bias1,
            self.kernels2,
            self.bias2,
            self.head_w,
            self.head_b,
        ]

    def zero_grads(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    # -- plumbing shared by all passes

    def _mask_of(self, x: np.ndarray, mask: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
        if mask is None:
            mask = np.ones(x.shape[:2])
        m = mask[..., None]
        n = np.maximum(mask.sum(axis=1), 1.0)[:, None]
        return m, n

    def _layer1(self, x0: np.ndarray) -> np.ndarray:
        return np.concatenate(
            [
                conv1d(x0, k.value, padding="same", bias=b.value)
                for k, b in zip(self.kernels1, self.bias1)
            ],
            axis=-1,
        )

    def _layer1_transpose(self, dy: np.ndarray) -> np.ndarray:
        dx = 0.0
        zeros_in = np.zeros(dy.shape[:2] + (self.l,))
        for i, k in enumerate(self.kernels1):
            sl = dy[..., i * self.channels : (i + 1) * self.channels]
            dx = dx + conv1d_backward(sl, zeros_in, k.value, "same")[0]
        return dx

    def forward(self, x: np.ndarray, mask: np.ndarray | None = None) -> tuple[np.ndarray, tuple]:
        """Score a batch ``x (B, T, L)``; returns ``(scores (B,), cache)``."""
        if x.ndim != 3 or x.shape[-1] != self.l:
            raise ValueError(
                f"discriminator expects (B, T, {self.l}) input, got {x.shape}"
            )
        m, n = self._mask_of(x, mask)
        x0 = x * m
        y = self._layer1(x0)
        h1 = leaky_relu(y, self.leak) * m
        z = conv1d(h1, self.kernels2.value, padding="same", bias=self.bias2.value)
        h2 = leaky_relu(z, self.leak) * m
        pooled = h2.sum(axis=1) / n
        scores = pooled @ self.head_w.value + self.head_b.value[0]
        cache = (x0, m, n, y, h1, z, pooled)
        return scores, cache

    def backward(self, dscores: np.ndarray, cache: tuple) -> np.ndarray:
        """Accumulate parameter gradients; returns the input gradient."""
        x0, m, n, y, h1, z, pooled = cache
        self.head_w.grad += pooled.T @ dscores
        self.head_b.grad += dscores.sum(keepdims=True)
        dpooled = dscores[:, None] * self.head_w.value[None, :]
        da2 = (dpooled[:, None, :] / n[:, :, None]) * m
        dz = leaky_relu_backward(da2, z, self.leak)
        dh1, dk2, db2 = conv1d_backward(dz, h1, self.kernels2.value, "same")
        self.kernels2.grad += dk2
        self.bias2.grad += db2
        dy = leaky_relu_backward(dh1 * m, y, self.leak)
        dx0 = 0.0
        for i, (k, b) in enumerate(zip(self.kernels1, self.bias1)):
            sl = dy[..., i * self.channels : (i + 1) * self.channels]
            dxi, dki, dbi = conv1d_backward(sl, x0, k.value, "same")
            k.grad += dki
            b.grad += dbi
            dx0 = dx0 + dxi
        return dx0 * m

    def input_gradient(
        self, x: np.ndarray, mask: np.ndarray | None = None
    ) -> tuple[np.ndarray, tuple]:
        """Per-example gradient of the scalar score with respect to ``x``.

        Returns ``(g (B, T, L), cache)``; the cache feeds
        :meth:`penalty_param_grads`, which differentiates through this
        computation treating the activation-slope masks as constants.
        """
        m, n = self._mask_of(x, mask)
        x0 = x * m
        y = self._layer1(x0)
        phi1p = np.where(y >= 0.0, 1.0, self.leak)
        h1 = leaky_relu(y, self.leak) * m
        z = conv1d(h1, self.kernels2.value, padding="same", bias=self.bias2.value)
        phi2p = np.where(z >= 0.0, 1.0, self.leak)

        dz = phi2p * (m * (self.head_w.value[None, None, :] / n[:, :, None]))
        dh1 = conv1d_backward(dz, h1, self.kernels2.value, "same")[0]
        dy = phi1p * (m * dh1)
        g = self._layer1_transpose(dy) * m
        cache = (m, n, phi1p, phi2p, dy, dz)
        return g, cache

    def penalty_param_grads(self, u: np.ndarray, cache: tuple) -> None:
        """Accumulate d(penalty)/d(params) given ``u = d(penalty)/d(g)``.

        The input-gradient chain is linear in the kernels and head weights
        once the slope masks are frozen, so each parameter's contribution
        is an exact convolution identity; biases do not appear in the
        chain and receive nothing.
        """
        m, n, phi1p, phi2p, dy, dz = cache
        ubar = u * m
        for i, k in enumerate(self.kernels1):
            sl = dy[..., i * self.channels : (i + 1) * self.channels]
            dki = conv1d_backward(sl, ubar, k.value, "same")[1]
            k.grad += dki
        v1 = self._layer1_plain(ubar)
        r = phi1p * (m * v1)
        self.kernels2.grad += conv1d_backward(dz, r, self.kernels2.value, "same")[1]
        v2 = conv1d(r, self.kernels2.value, padding="same")
        self.head_w.grad += ((phi2p * v2 * m) / n[:, :, None]).sum(axis=(0, 1))

    def _layer1_plain(self, x: np.ndarray) -> np.ndarray:
        # layer-1 convolutions without biases, for the penalty chain
        return np.concatenate(
            [conv1d(x, k.value, padding="same") for k in self.kernels1], axis=-1
        )


class LinearCritic:
    """Critic scoring ``<w, x> + b``; its input gradient is ``w`` everywhere.

    Exists for closed-form penalty checks: with ``||w|| = s`` the penalty
    is exactly ``(s - 1)^2`` for any batch.
    """

    def __init__(self, w: np.ndarray, b: float = 0.0):
        self.w = np.asarray(w, dtype=np.float64)
        self.b = b

    def forward(self, x: np.ndarray, mask: np.ndarray | None = None) -> tuple[np.ndarray, tuple]:
        m = np.ones(x.shape[:2]) if mask is None else mask
        scores = np.einsum("btl,tl->b", x * m[..., None], np.broadcast_to(self.w, x.shape[1:]))
        return scores + self.b, ()

    def input_gradient(
        self, x: np.ndarray, mask: np.ndarray | None = None
    ) -> tuple[np.ndarray, tuple]:
        m = np.ones(x.shape[:2]) if mask is None else mask
        g = np.broadcast_to(self.w, x.shape) * m[..., None]
        return np.array(g), ()


# ---------------------------------------------------------------------------
# losses


def discriminate(pv: PhonemeVectorSequence, critic) -> float:
    """Scalar score of one phoneme-vector sequence."""
    x = np.asarray(pv.vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected (T, L) vectors, got shape {x.shape}")
    mask = None if pv.mask is None else np.asarray(pv.mask, dtype=np.float64)[None]
    scores, _ = critic.forward(x[None], mask)
    return float(scores[0])


def _penalty_forward(
    real: np.ndarray,
    fake: np.ndarray,
    critic,
    rng: np.random.Generator,
    mask: np.ndarray | None = None,
) -> tuple[float, np.ndarray, np.ndarray, tuple]:
    if real.shape != fake.shape:
        raise ValueError(f"batch shapes differ: real {real.shape} vs fake {fake.shape}")
    eps = rng.uniform(size=(real.shape[0], 1, 1))
    xhat = eps * real + (1.0 - eps) * fake
    g, cache = critic.input_gradient(xhat, mask)
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("non-finite critic gradient in penalty term")
    norms = np.sqrt(np.sum(g * g, axis=(1, 2)))
    value = float(np.mean((norms - 1.0) ** 2))
    return value, g, norms, cache


def gradient_penalty(
    real: np.ndarray,
    fake: np.ndarray,
    critic,
    rng: np.random.Generator,
    mask: np.ndarray | None = None,
) -> float:
    """Mean squared deviation of interpolate gradient norms from 1.

    One interpolation coefficient is drawn per example.
    """
    value, _, _, _ = _penalty_forward(real, fake, critic, rng, mask)
    return value


def _penalty_u(g: np.ndarray, norms: np.ndarray, scale: float) -> np.ndarray:
    """d(scale * penalty)/dg; zero where a norm vanishes."""
    b = g.shape[0]
    safe = np.where(norms > 0.0, norms, 1.0)
    coef = np.where(norms > 0.0, scale * (2.0 / b) * (norms - 1.0) / safe, 0.0)
    return coef[:, None, None] * g


def d_loss(
    real: np.ndarray,
    fake: np.ndarray,
    critic,
    gp_lambda: float,
    rng: np.random.Generator,
    real_mask: np.ndarray | None = None,
    fake_mask: np.ndarray | None = None,
) -> float:
    """Critic loss: -(mean real score - mean fake score) + lambda * penalty."""
    if real.shape[0] == 0 or fake.shape[0] == 0:
        raise ValueError("batches must be non-empty")
    sr, _ = critic.forward(real, real_mask)
    sf, _ = critic.forward(fake, fake_mask)
    both = None
    if real_mask is not None or fake_mask is not None:
        mr = np.ones(real.shape[:2]) if real_mask is None else real_mask
        mf = np.ones(fake.shape[:2]) if fake_mask is None else fake_mask
        both = mr * mf
    gp = gradient_penalty(real, fake, critic, rng, both)
    return float(-(sr.mean() - sf.mean()) + gp_lambda * gp)


def g_loss(fake: np.ndarray, critic, mask: np.ndarray | None = None) -> float:
    """Generator loss: the negated mean critic score of the fake batch."""
    scores, _ = critic.forward(fake, mask)
    return float(-scores.mean())


# ---------------------------------------------------------------------------
# training


@dataclass
class GanConfig:
    """Hyperparameters for adversarial mapping training."""

    k: int
    l: int
    mode: str = "gumbel"
    inv_temp: float = 0.9
    lr_g: float = 0.01
    lr_d: float = 0.001
    d_steps_per_g: int = 3
    gp_lambda: float = 10.0
    batch: int = 128
    seq_len: int = 32
    iterations: int = 5000
    channels: int = 8
    leak: float = 0.2
    seed: int = 0
    e_init_scale: float = 0.1
    early_stop: bool = True
    probe_every: int = 25
    patience: int = 8
    min_iterations: int = 200

    def __post_init__(self) -> None:
        if self.mode not in ("softmax", "gumbel"):
            raise ValueError(f"mode must be 'softmax' or 'gumbel', got {self.mode!r}")
        positive = {
            "k": self.k,
            "l": self.l,
            "inv_temp": self.inv_temp,
            "lr_g": self.lr_g,
            "lr_d": self.lr_d,
            "d_steps_per_g": self.d_steps_per_g,
            "gp_lambda": self.gp_lambda,
            "batch": self.batch,
            "seq_len": self.seq_len,
            "iterations": self.iterations,
            "channels": self.channels,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")


@dataclass
class TrainingLogRow:
    iteration: int
    d_loss: float
    g_loss: float
    gp: float
    probe_accuracy: float = float("nan")


def _as_sequences(corpus) -> list[np.ndarray]:
    seqs = []
    for item in corpus:
        arr = as_int_array(getattr(item, "indices", item), "sequence")
        if arr.size:
            seqs.append(arr)
    if not seqs:
        raise ValueError("corpus has no non-empty sequences")
    return seqs


def _sample_windows(
    seqs: list[np.ndarray], batch: int, seq_len: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-length windows with a validity mask for shorter sequences."""
    out = np.zeros((batch, seq_len), dtype=np.int64)
    mask = np.zeros((batch, seq_len))
    which = rng.integers(len(seqs), size=batch)
    for row, si in enumerate(which):
        s = seqs[si]
        if s.size <= seq_len:
            out[row, : s.size] = s
            mask[row, : s.size] = 1.0
        else:
            start = int(rng.integers(s.size - seq_len + 1))
            out[row] = s[start : start + seq_len]
            mask[row] = 1.0
    return out, mask


def _one_hot_windows(ids: np.ndarray, mask: np.ndarray, l: int) -> np.ndarray:
    rows = np.zeros(ids.shape + (l,))
    np.put_along_axis(rows, ids[..., None], 1.0, axis=-1)
    return rows * mask[..., None]


def _critic_update(
    critic: Discriminator,
    opt: AdamOptimizer,
    real_x: np.ndarray,
    real_m: np.ndarray,
    fake_x: np.ndarray,
    fake_m: np.ndarray,
    gp_lambda: float,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """One critic step; returns (loss value, penalty value)."""
    critic.zero_grads()
    b = real_x.shape[0]
    sr, cache_r = critic.forward(real_x, real_m)
    sf, cache_f = critic.forward(fake_x, fake_m)
    critic.backward(np.full(b, -1.0 / b), cache_r)
    critic.backward(np.full(b, 1.0 / b), cache_f)

    both = real_m * fake_m
    gp, g, norms, gcache = _penalty_forward(real_x, fake_x, critic, rng, both)
    critic.penalty_param_grads(_penalty_u(g, norms, gp_lambda), gcache)

    loss = float(-(sr.mean() - sf.mean()) + gp_lambda * gp)
    if not np.isfinite(loss):
        raise FloatingPointError("critic loss diverged")
    opt.step()
    return loss, gp


def _generator_update(
    table_param: Parameter,
    opt: AdamOptimizer,
    critic: Discriminator,
    c_win: np.ndarray,
    mask: np.ndarray,
    config: GanConfig,
    rng: np.random.Generator,
) -> float:
    """One lookup-table step against the frozen critic; returns its loss."""
    table_param.zero_grad()
    critic.zero_grads()  # discarded; this loss never updates the critic
    rows, soft = _generate_windows(
        c_win, mask, table_param.value, config.mode, rng, config.inv_temp
    )
    scores, cache = critic.forward(rows, mask)
    b = rows.shape[0]
    drows = critic.backward(np.full(b, -1.0 / b), cache)
    table_param.grad += _generate_backward(
        drows, soft, c_win, mask, config.mode, config.inv_temp, config.k
    )
    critic.zero_grads()
    loss = float(-scores.mean())
    if not np.isfinite(loss):
        raise FloatingPointError("generator loss diverged")
    opt.step()
    return loss


def train(
    cluster_corpus,
    phoneme_corpus,
    config: GanConfig,
    probe_labels: np.ndarray | None = None,
) -> tuple[LookupTable, list[TrainingLogRow]]:
    """Adversarial training of the lookup table.

    ``cluster_corpus``: cluster-index sequences (values 1..K);
    ``phoneme_corpus``: phoneme-id sequences from text (values 0..L-1).
    The corpora are unpaired.  ``probe_labels``, when given, must align
    with the concatenation of ``cluster_corpus`` and is used only to log
    decode accuracy during training.

    Early stopping (on by default) halts once the argmax decode map has
    been stable for ``patience`` consecutive probes after
    ``min_iterations``; the mapping has then committed and further
    critic-generator play cannot change the decoded output.
    """
    c_seqs = _as_sequences(cluster_corpus)
    p_seqs = _as_sequences(phoneme_corpus)
    for s in c_seqs:
        _check_indices(s, config.k)
    for s in p_seqs:
        if s.min() < 0 or s.max() >= config.l:
            raise ValueError(
                f"phoneme ids must lie in [0, {config.l - 1}], got "
                f"range [{s.min()}, {s.max()}]"
            )

    table_param = Parameter(
        LookupTable.init(
            config.k,
            config.l,
            new_rng(derive_seed(config.seed, "init-e")),
            scale=config.e_init_scale,
        ).e
    )
    critic = Discriminator(
        config.l,
        channels=config.channels,
        leak=config.leak,
        seed=derive_seed(config.seed, "init-d"),
    )
    g_opt = AdamOptimizer([table_param], lr=config.lr_g)
    d_opt = AdamOptimizer(critic.parameters(), lr=config.lr_d)
    loop_rng = new_rng(derive_seed(config.seed, "train-loop"))

    probe_flat = None
    if probe_labels is not None:
        probe_flat = np.concatenate(c_seqs)
        probe_labels = as_int_array(probe_labels, "probe_labels")
        if probe_labels.size != probe_flat.size:
            raise ValueError(
                f"probe_labels length {probe_labels.size} does not match "
                f"corpus segment count {probe_flat.size}"
            )

    log: list[TrainingLogRow] = []
    last_map = None
    stable = 0
    probe_acc = float("nan")

    for iteration in range(1, config.iterations + 1):
        d_val = gp_val = 0.0
        for _ in range(config.d_steps_per_g):
            p_win, p_mask = _sample_windows(p_seqs, config.batch, config.seq_len, loop_rng)
            real_x = _one_hot_windows(p_win, p_mask, config.l)
            c_win, c_mask = _sample_windows(c_seqs, config.batch, config.seq_len, loop_rng)
            fake_x, _ = _generate_windows(
                c_win, c_mask, table_param.value, config.mode, loop_rng, config.inv_temp
            )
            try:
                d_val, gp_val = _critic_update(
                    critic, d_opt, real_x, p_mask, fake_x, c_mask, config.gp_lambda, loop_rng
                )
            except FloatingPointError as exc:
                raise FloatingPointError(f"iteration {iteration}: {exc}") from exc

        c_win, c_mask = _sample_windows(c_seqs, config.batch, config.seq_len, loop_rng)
        try:
            g_val = _generator_update(
                table_param, g_opt, critic, c_win, c_mask, config, loop_rng
            )
        except FloatingPointError as exc:
            raise FloatingPointError(f"iteration {iteration}: {exc}") from exc

        if iteration % config.probe_every == 0 or iteration == config.iterations:
            current_map = np.argmax(table_param.value, axis=1)
            if probe_flat is not None:
                preds = current_map[probe_flat - 1]
                probe_acc = float((preds == probe_labels).mean())
            if last_map is not None and np.array_equal(current_map, last_map):
                stable += 1
            else:
                stable = 0
            last_map = current_map
        log.append(TrainingLogRow(iteration, d_val, g_val, gp_val, probe_acc))

        if (
            config.early_stop
            and iteration >= config.min_iterations
            and stable >= config.patience
        ):
            break

    return LookupTable(e=table_param.value), log


# ---------------------------------------------------------------------------
# estimator facade


class PhonemeMapperGan(BaseEstimator):
    """Adversarially trained cluster-to-phoneme mapper.

    ``fit`` takes the cluster-index corpus and the unpaired phoneme-id
    corpus; ``predict`` decodes cluster-index sequences to phoneme ids by
    table-row argmax.  Parameters mirror :class:`GanConfig`.
    """

    def __init__(
        self,
        k: int = 10,
        l: int = 10,
        mode: str = "gumbel",
        inv_temp: float = 0.9,
        lr_g: float = 0.01,
        lr_d: float = 0.001,
        d_steps_per_g: int = 3,
        gp_lambda: float = 10.0,
        batch: int = 128,
        seq_len: int = 32,
        iterations: int = 5000,
        channels: int = 8,
        leak: float = 0.2,
        seed: int = 0,
        e_init_scale: float = 0.1,
        early_stop: bool = True,
        probe_every: int = 25,
        patience: int = 8,
        min_iterations: int = 200,
    ):
        self.k = k
        self.l = l
        self.mode = mode
        self.inv_temp = inv_temp
        self.lr_g = lr_g
        self.lr_d = lr_d
        self.d_steps_per_g = d_steps_per_g
        self.gp_lambda = gp_lambda
        self.batch = batch
        self.seq_len = seq_len
        self.iterations = iterations
        self.channels = channels
        self.leak = leak
        self.seed = seed
        self.e_init_scale = e_init_scale
        self.early_stop = early_stop
        self.probe_every = probe_every
        self.patience = patience
        self.min_iterations = min_iterations

    def _config(self) -> GanConfig:
        return GanConfig(**{f: getattr(self, f) for f in GanConfig.__dataclass_fields__})

    def fit(self, X, y, probe_labels: np.ndarray | None = None):
        """Train on cluster sequences ``X`` against phoneme sequences ``y``."""
        table, log = train(X, y, self._config(), probe_labels=probe_labels)
        self.table_ = table
        self.log_ = log
        return self

    def predict(self, X) -> np.ndarray | list[np.ndarray]:
        """Decode one sequence (array) or a list of sequences."""
        check_fitted(self, "table_")
        if isinstance(X, np.ndarray) and X.ndim == 1:
            return decode(X, self.table_)
        return [decode(getattr(s, "indices", s), self.table_) for s in X]


# ---------------------------------------------------------------------------
# file formats


def write_mapping(path: str | Path, table: LookupTable, phoneme_names: list[str]) -> None:
    if len(phoneme_names) != table.l:
        raise ValueError(f"{len(phoneme_names)} names for {table.l} phonemes")
    rec = {
        "k": table.k,
        "l": table.l,
        "e": table.e.tolist(),
        "phoneme_names": list(phoneme_names),
    }
    Path(path).write_text(json.dumps(rec, sort_keys=True) + "\n")


def read_mapping(path: str | Path) -> tuple[LookupTable, list[str]]:
    rec = json.loads(Path(path).read_text())
    e = np.asarray(rec["e"], dtype=np.float64)
    if e.shape != (rec["k"], rec["l"]):
        raise ValueError(f"mapping shape {e.shape} does not match header ({rec['k']}, {rec['l']})")
    return LookupTable(e=e), [str(n) for n in rec["phoneme_names"]]


def write_training_log(path: str | Path, rows: list[TrainingLogRow]) -> None:
    with Path(path).open("w") as fh:
        fh.write("iteration,d_loss,g_loss,gp,probe_accuracy\n")
        for r in rows:
            fh.write(f"{r.iteration},{r.d_loss!r},{r.g_loss!r},{r.gp!r},{r.probe_accuracy!r}\n")


def read_training_log(path: str | Path) -> list[TrainingLogRow]:
    rows = []
    with Path(path).open() as fh:
        header = fh.readline().strip()
        if header != "iteration,d_loss,g_loss,gp,probe_accuracy":
            raise ValueError(f"unexpected training-log header: {header!r}")
        for line in fh:
            it, dl, gl, gp, pa = line.strip().split(",")
            rows.append(TrainingLogRow(int(it), float(dl), float(gl), float(gp), float(pa)))
    return rows


def write_decoded(path: str | Path, ids: list[str], phonemes: list[np.ndarray]) -> None:
    """Write decoded phoneme-id sequences as JSON lines of ``{"id", "phonemes"}``."""
    if len(ids) != len(phonemes):
        raise ValueError(f"{len(ids)} ids but {len(phonemes)} sequences")
    with Path(path).open("w") as fh:
        for utt_id, seq in zip(ids, phonemes):
            seq = np.asarray(seq, dtype=np.int64)
            fh.write(json.dumps({"id": str(utt_id), "phonemes": seq.tolist()}) + "\n")


def read_decoded(path: str | Path) -> tuple[list[str], list[np.ndarray]]:
    ids: list[str] = []
    phonemes: list[np.ndarray] = []
    path = Path(path)
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                ids.append(str(rec["id"]))
                phonemes.append(np.asarray(rec["phonemes"], dtype=np.int64))
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad decoded record: {exc}") from exc
    if not ids:
        raise ValueError(f"{path}: no decoded records")
    return ids, phonemes
