"""Per-segment LSTM classifier for labeled-fraction comparison curves."""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .nn.adam import AdamOptimizer, Parameter
from .nn.lstm import LstmWeights, lstm_backward, lstm_forward
from .nn.ops import softmax
from .nn.rng import derive_seed, new_rng
from .validation import as_int_array, check_fitted

__all__ = ["SegmentClassifier", "supervised_baseline", "pad_segments"]


def pad_segments(segments: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Stack variable-length segments into ``(B, T_max, d)`` plus a mask.

    The mask is 1.0 on real frames and 0.0 on padding.
    """
    if not segments:
        raise ValueError("need at least one segment")
    arrs = [np.asarray(s, dtype=np.float64) for s in segments]
    for i, a in enumerate(arrs):
        if a.ndim != 2 or a.shape[0] < 1:
            raise ValueError(f"segment {i} must be a non-empty 2-D array, got shape {a.shape}")
        if a.shape[1] != arrs[0].shape[1]:
            raise ValueError(
                f"segment {i} has {a.shape[1]} features, expected {arrs[0].shape[1]}"
            )
    t_max = max(a.shape[0] for a in arrs)
    xs = np.zeros((len(arrs), t_max, arrs[0].shape[1]))
    mask = np.zeros((len(arrs), t_max))
    for i, a in enumerate(arrs):
        xs[i, : a.shape[0]] = a
        mask[i, : a.shape[0]] = 1.0
    return xs, mask


class SegmentClassifier(ClassifierMixin, BaseEstimator):
    """One-layer LSTM over segment frames, relu on the final state, softmax head.

    ``X`` is a list of per-segment frame matrices ``(T_i, d)``; ``y`` holds one
    integer label per segment.  Trained with cross-entropy and Adam on
    shuffled minibatches, each padded to its own longest segment.
    """

    def __init__(
        self,
        hidden_size: int = 32,
        epochs: int = 40,
        lr: float = 1e-3,
        batch_size: int = 32,
        seed: int = 0,
    ):
        self.hidden_size = hidden_size
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.seed = seed

    def fit(self, X: list[np.ndarray], y) -> "SegmentClassifier":
        labels = as_int_array(y, "y")
        if len(X) != labels.size:
            raise ValueError(f"{len(X)} segments but {labels.size} labels")
        if len(X) == 0:
            raise ValueError("cannot fit on an empty corpus")
        if self.epochs < 1 or self.batch_size < 1 or self.hidden_size < 1:
            raise ValueError("hidden_size, epochs and batch_size must be positive")
        xs_all = [np.asarray(s, dtype=np.float64) for s in X]
        if xs_all[0].ndim != 2:
            raise ValueError(f"segments must be 2-D arrays, got shape {xs_all[0].shape}")
        d = xs_all[0].shape[1]
        self.classes_ = np.unique(labels)
        y_idx = np.searchsorted(self.classes_, labels)
        n_classes = self.classes_.size

        rng = new_rng(derive_seed(self.seed, "classifier-init"))
        enc = LstmWeights.init(d, self.hidden_size, rng)
        bound = 1.0 / np.sqrt(self.hidden_size)
        params = [
            Parameter(enc.wx),
            Parameter(enc.wh),
            Parameter(enc.b),
            Parameter(rng.uniform(-bound, bound, (self.hidden_size, n_classes))),
            Parameter(rng.uniform(-bound, bound, n_classes)),
        ]
        weights = LstmWeights(wx=params[0].value, wh=params[1].value, b=params[2].value)
        w_out, b_out = params[3], params[4]
        opt = AdamOptimizer(params, lr=self.lr)
        shuffle = new_rng(derive_seed(self.seed, "classifier-shuffle"))

        n = len(xs_all)
        self.loss_curve_ = []
        for epoch in range(self.epochs):
            order = shuffle.permutation(n)
            total = 0.0
            for start in range(0, n, self.batch_size):
                batch = order[start : start + self.batch_size]
                xs, mask = pad_segments([xs_all[i] for i in batch])
                targets = y_idx[batch]
                b = batch.size

                _, h_last, _, caches = lstm_forward(xs, mask, weights)
                a = np.maximum(h_last, 0.0)
                logits = a @ w_out.value + b_out.value
                if not np.all(np.isfinite(logits)):
                    raise FloatingPointError(f"training diverged at epoch {epoch}")
                probs = softmax(logits)
                loss = -np.mean(np.log(probs[np.arange(b), targets] + 1e-300))
                if not np.isfinite(loss):
                    raise FloatingPointError(f"training diverged at epoch {epoch}")
                total += loss * b

                dlogits = probs.copy()
                dlogits[np.arange(b), targets] -= 1.0
                dlogits /= b
                opt.zero_grads()
                w_out.grad[...] = a.T @ dlogits
                b_out.grad[...] = dlogits.sum(axis=0)
                da = dlogits @ w_out.value.T
                dh_last = da * (h_last > 0.0)
                _, dwx, dwh, db, _, _ = lstm_backward(None, dh_last, None, caches, weights)
                params[0].grad[...] = dwx
                params[1].grad[...] = dwh
                params[2].grad[...] = db
                opt.step()
            self.loss_curve_.append(total / n)

        self.weights_ = weights
        self.w_out_ = w_out.value
        self.b_out_ = b_out.value
        self.n_features_in_ = d
        return self

    def predict_proba(self, X: list[np.ndarray]) -> np.ndarray:
        check_fitted(self, "weights_")
        out = np.empty((len(X), self.classes_.size))
        for start in range(0, len(X), 256):
            chunk = X[start : start + 256]
            xs, mask = pad_segments(chunk)
            _, h_last, _, _ = lstm_forward(xs, mask, self.weights_)
            a = np.maximum(h_last, 0.0)
            out[start : start + len(chunk)] = softmax(a @ self.w_out_ + self.b_out_)
        return out

    def predict(self, X: list[np.ndarray]) -> np.ndarray:
        probs = self.predict_proba(X)
        return self.classes_[np.argmax(probs, axis=1)]


def supervised_baseline(
    train_segments: list[np.ndarray],
    train_labels,
    test_segments: list[np.ndarray],
    test_labels,
    fraction: float = 1.0,
    hidden_size: int = 32,
    epochs: int = 40,
    lr: float = 1e-3,
    batch_size: int = 32,
    seed: int = 0,
) -> float:
    """Test accuracy of a classifier trained on a labeled fraction.

    The fraction of training segments is sampled without replacement under
    the run seed.  If the sample misses a class entirely, a warning is
    emitted and training proceeds; that class then cannot be predicted.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    labels = as_int_array(train_labels, "train_labels")
    if len(train_segments) != labels.size:
        raise ValueError(f"{len(train_segments)} segments but {labels.size} labels")
    rng = new_rng(derive_seed(seed, "label-fraction"))
    n = labels.size
    n_keep = max(1, int(round(fraction * n)))
    keep = np.sort(rng.choice(n, size=n_keep, replace=False))
    sub_labels = labels[keep]
    missing = np.setdiff1d(np.unique(labels), np.unique(sub_labels))
    if missing.size:
        warnings.warn(
            f"labeled fraction {fraction} left {missing.size} class(es) without "
            "examples; they cannot be predicted",
            RuntimeWarning,
            stacklevel=2,
        )
    clf = SegmentClassifier(
        hidden_size=hidden_size, epochs=epochs, lr=lr, batch_size=batch_size, seed=seed
    )
    clf.fit([train_segments[i] for i in keep], sub_labels)
    pred = clf.predict(test_segments)
    ref = as_int_array(test_labels, "test_labels")
    if pred.size != ref.size:
        raise ValueError(f"{pred.size} predictions but {ref.size} test labels")
    return float((pred == ref).mean())
