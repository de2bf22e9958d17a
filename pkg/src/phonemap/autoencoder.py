"""Sequence autoencoder turning variable-length segments into fixed vectors.

The encoder LSTM runs over a segment's frames from a zero initial state;
its final hidden state is the segment embedding.  The decoder LSTM starts
from that embedding (cell state zero) and reconstructs the frames under
teacher forcing, with a zero frame as its first input and an affine
projection from hidden size back to feature dimension.  Training minimizes
mean squared reconstruction error over real (unpadded) frames only.

Checkpoint format ``sae-checkpoint-v1``: a single JSON object with keys
``format``, ``hidden_size``, ``n_features``, ``reverse_targets``,
``encoder``/``decoder`` (each ``{"wx", "wh", "b"}`` as nested lists), and
``w_out``/``b_out`` for the output projection.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .nn.adam import AdamOptimizer, Parameter
from .nn.lstm import LstmWeights, lstm_backward, lstm_forward
from .nn.rng import derive_seed, new_rng
from .supervised import pad_segments
from .validation import check_fitted

__all__ = ["SequenceAutoencoder", "write_sae", "read_sae"]

_CHECKPOINT_FORMAT = "sae-checkpoint-v1"


def _bucketed_batches(lengths: list[int], batch_size: int) -> list[np.ndarray]:
    """Split indices into batches of near-equal segment length.

    Indices are ordered by (length, position) so each batch pads little;
    membership is deterministic, only the batch visit order is shuffled
    during training.
    """
    order = np.lexsort((np.arange(len(lengths)), np.asarray(lengths)))
    return [order[s : s + batch_size] for s in range(0, len(order), batch_size)]


def _reverse_valid(xs: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Reverse each sequence within its true length, leaving padding put."""
    out = xs.copy()
    for i, n in enumerate(lengths):
        out[i, :n] = xs[i, :n][::-1]
    return out


class SequenceAutoencoder(TransformerMixin, BaseEstimator):
    """LSTM encoder/decoder over frame segments; embeddings from ``transform``.

    ``X`` is a list of per-segment frame matrices ``(T_i, d_f)``.  Paper-scale
    defaults are 512 hidden units, 300 epochs, learning rate 5e-4 and batch
    128; the desk-scale default shrinks only the hidden size.
    """

    def __init__(
        self,
        hidden_size: int = 16,
        epochs: int = 300,
        lr: float = 5e-4,
        batch_size: int = 128,
        seed: int = 0,
        reverse_targets: bool = False,
    ):
        self.hidden_size = hidden_size
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.seed = seed
        self.reverse_targets = reverse_targets

    def _loss_and_grads(
        self,
        xs: np.ndarray,
        mask: np.ndarray,
        params: list[Parameter],
        enc: LstmWeights,
        dec: LstmWeights,
    ) -> float:
        w_out, b_out = params[6], params[7]
        lengths = mask.sum(axis=1).astype(np.int64)
        targets = _reverse_valid(xs, lengths) if self.reverse_targets else xs
        dec_in = np.zeros_like(targets)
        dec_in[:, 1:] = targets[:, :-1]

        _, h_seg, _, enc_caches = lstm_forward(xs, mask, enc)
        dec_hs, _, _, dec_caches = lstm_forward(
            dec_in, mask, dec, h0=h_seg, c0=np.zeros_like(h_seg)
        )
        preds = dec_hs @ w_out.value + b_out.value
        diff = (preds - targets) * mask[..., None]
        n_values = mask.sum() * xs.shape[2]
        loss = float((diff**2).sum() / n_values)

        dpreds = 2.0 * diff / n_values
        w_out.grad[...] = np.einsum("bth,btf->hf", dec_hs, dpreds)
        b_out.grad[...] = dpreds.sum(axis=(0, 1))
        ddec_hs = dpreds @ w_out.value.T
        _, dwx, dwh, db, dh0, _ = lstm_backward(ddec_hs, None, None, dec_caches, dec)
        params[3].grad[...] = dwx
        params[4].grad[...] = dwh
        params[5].grad[...] = db
        _, dwx, dwh, db, _, _ = lstm_backward(None, dh0, None, enc_caches, enc)
        params[0].grad[...] = dwx
        params[1].grad[...] = dwh
        params[2].grad[...] = db
        return loss

    def fit(self, X: list[np.ndarray], y=None) -> "SequenceAutoencoder":
        if len(X) == 0:
            raise ValueError("cannot fit on an empty corpus")
        if self.epochs < 1 or self.batch_size < 1 or self.hidden_size < 1:
            raise ValueError("hidden_size, epochs and batch_size must be positive")
        segs = [np.asarray(s, dtype=np.float64) for s in X]
        xs_all, _ = pad_segments(segs)  # shape validation only
        d = xs_all.shape[2]

        rng = new_rng(derive_seed(self.seed, "sae-init"))
        enc_init = LstmWeights.init(d, self.hidden_size, rng)
        dec_init = LstmWeights.init(d, self.hidden_size, rng)
        bound = 1.0 / np.sqrt(self.hidden_size)
        params = [
            Parameter(enc_init.wx),
            Parameter(enc_init.wh),
            Parameter(enc_init.b),
            Parameter(dec_init.wx),
            Parameter(dec_init.wh),
            Parameter(dec_init.b),
            Parameter(rng.uniform(-bound, bound, (self.hidden_size, d))),
            Parameter(rng.uniform(-bound, bound, d)),
        ]
        enc = LstmWeights(wx=params[0].value, wh=params[1].value, b=params[2].value)
        dec = LstmWeights(wx=params[3].value, wh=params[4].value, b=params[5].value)
        opt = AdamOptimizer(params, lr=self.lr)
        shuffle = new_rng(derive_seed(self.seed, "sae-shuffle"))

        batches = _bucketed_batches([s.shape[0] for s in segs], self.batch_size)
        padded = [pad_segments([segs[i] for i in batch]) for batch in batches]
        sizes = np.array([len(batch) for batch in batches], dtype=np.float64)

        self.loss_curve_ = []
        for epoch in range(self.epochs):
            visit = shuffle.permutation(len(batches))
            total = 0.0
            for b in visit:
                xs, mask = padded[b]
                opt.zero_grads()
                loss = self._loss_and_grads(xs, mask, params, enc, dec)
                if not np.isfinite(loss):
                    raise FloatingPointError(f"training diverged at epoch {epoch}")
                opt.step()
                total += loss * sizes[b]
            self.loss_curve_.append(total / sizes.sum())

        self.enc_ = enc
        self.dec_ = dec
        self.w_out_ = params[6].value
        self.b_out_ = params[7].value
        self.n_features_in_ = d
        return self

    def transform(self, X: list[np.ndarray]) -> np.ndarray:
        """One embedding per segment, rows in the order segments were given."""
        check_fitted(self, "enc_")
        if len(X) == 0:
            raise ValueError("cannot transform an empty corpus")
        segs = [np.asarray(s, dtype=np.float64) for s in X]
        out = np.empty((len(segs), self.hidden_size))
        for batch in _bucketed_batches([s.shape[0] for s in segs], 256):
            xs, mask = pad_segments([segs[i] for i in batch])
            _, h_seg, _, _ = lstm_forward(xs, mask, self.enc_)
            out[batch] = h_seg
        return out

    def encode(self, segment: np.ndarray) -> np.ndarray:
        """Embedding of a single segment: the encoder's final hidden state."""
        check_fitted(self, "enc_")
        seg = np.asarray(segment, dtype=np.float64)
        if seg.ndim != 2 or seg.shape[0] < 1:
            raise ValueError(f"segment must be a non-empty 2-D array, got shape {seg.shape}")
        if seg.shape[1] != self.n_features_in_:
            raise ValueError(
                f"segment has {seg.shape[1]} features, model expects {self.n_features_in_}"
            )
        _, h_seg, _, _ = lstm_forward(seg[None, :, :], None, self.enc_)
        return h_seg[0]


def write_sae(path: str | Path, model: SequenceAutoencoder) -> None:
    """Serialize a fitted model in the ``sae-checkpoint-v1`` JSON layout."""
    check_fitted(model, "enc_")
    rec = {
        "format": _CHECKPOINT_FORMAT,
        "hidden_size": model.hidden_size,
        "n_features": model.n_features_in_,
        "reverse_targets": model.reverse_targets,
        "encoder": {
            "wx": model.enc_.wx.tolist(),
            "wh": model.enc_.wh.tolist(),
            "b": model.enc_.b.tolist(),
        },
        "decoder": {
            "wx": model.dec_.wx.tolist(),
            "wh": model.dec_.wh.tolist(),
            "b": model.dec_.b.tolist(),
        },
        "w_out": model.w_out_.tolist(),
        "b_out": model.b_out_.tolist(),
    }
    Path(path).write_text(json.dumps(rec, sort_keys=True) + "\n")


def _weights_from(rec: dict, n_features: int, hidden: int, which: str) -> LstmWeights:
    w = LstmWeights(
        wx=np.asarray(rec[which]["wx"], dtype=np.float64),
        wh=np.asarray(rec[which]["wh"], dtype=np.float64),
        b=np.asarray(rec[which]["b"], dtype=np.float64),
    )
    if w.wx.shape != (n_features, 4 * hidden) or w.wh.shape != (hidden, 4 * hidden):
        raise ValueError(f"{which} weight shapes do not match the declared sizes")
    return w


def read_sae(path: str | Path) -> SequenceAutoencoder:
    """Load a ``sae-checkpoint-v1`` file into a ready-to-encode model."""
    rec = json.loads(Path(path).read_text())
    if rec.get("format") != _CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {_CHECKPOINT_FORMAT} checkpoint")
    hidden = int(rec["hidden_size"])
    n_features = int(rec["n_features"])
    model = SequenceAutoencoder(
        hidden_size=hidden, reverse_targets=bool(rec["reverse_targets"])
    )
    model.enc_ = _weights_from(rec, n_features, hidden, "encoder")
    model.dec_ = _weights_from(rec, n_features, hidden, "decoder")
    model.w_out_ = np.asarray(rec["w_out"], dtype=np.float64)
    model.b_out_ = np.asarray(rec["b_out"], dtype=np.float64)
    if model.w_out_.shape != (hidden, n_features) or model.b_out_.shape != (n_features,):
        raise ValueError("output projection shapes do not match the declared sizes")
    model.n_features_in_ = n_features
    model.loss_curve_ = []
    return model
