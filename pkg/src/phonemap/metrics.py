"""Accuracy reports, reference baselines, and ensemble voting."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .validation import as_int_array

__all__ = [
    "EvalReport",
    "phoneme_accuracy",
    "evaluate",
    "baseline_random",
    "random_guesses",
    "baseline_most_frequent",
    "ensemble_vote",
    "read_report",
    "write_report",
]


@dataclass
class EvalReport:
    """Accuracy with its confusion matrix; rows index reference phonemes."""

    accuracy: float
    confusion: np.ndarray
    n_segments: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "confusion": self.confusion.tolist(),
            "n_segments": self.n_segments,
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "EvalReport":
        return cls(
            accuracy=float(rec["accuracy"]),
            confusion=np.asarray(rec["confusion"], dtype=np.float64),
            n_segments=int(rec["n_segments"]),
        )


def phoneme_accuracy(pred: np.ndarray, ref: np.ndarray) -> float:
    """Fraction of positions where prediction equals reference.

    Sequences must align one to one; a length mismatch means the segment
    pipeline broke upstream and is rejected rather than papered over.
    """
    p = as_int_array(pred, "pred")
    r = as_int_array(ref, "ref")
    if p.shape != r.shape:
        raise ValueError(f"length mismatch: pred {p.shape} vs ref {r.shape}")
    if p.size == 0:
        raise ValueError("cannot score empty sequences")
    return int((p == r).sum()) / p.size


def evaluate(pred: np.ndarray, ref: np.ndarray, l: int) -> EvalReport:
    """Full report: accuracy plus an L x L confusion count matrix."""
    p = as_int_array(pred, "pred")
    r = as_int_array(ref, "ref")
    accuracy = phoneme_accuracy(p, r)
    if p.min() < 0 or p.max() >= l or r.min() < 0 or r.max() >= l:
        raise ValueError(f"ids outside [0, {l - 1}]")
    confusion = np.zeros((l, l))
    np.add.at(confusion, (r, p), 1.0)
    return EvalReport(accuracy=accuracy, confusion=confusion, n_segments=p.size)


def baseline_random(n: int, l: int, seed: int = 0) -> EvalReport:
    """Expected report of uniform guessing: accuracy exactly 1/L.

    The confusion matrix holds expected counts (n / L^2 everywhere), so
    its trace over its total reproduces the reported accuracy.  Use
    :func:`random_guesses` for an empirical draw.
    """
    if l < 1:
        raise ValueError(f"need l >= 1, got {l}")
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    confusion = np.full((l, l), n / l**2)
    return EvalReport(
        accuracy=float(np.trace(confusion) / confusion.sum()),
        confusion=confusion,
        n_segments=n,
    )


def random_guesses(n: int, l: int, rng: np.random.Generator) -> np.ndarray:
    """One concrete uniform guess sequence, for empirical baseline checks."""
    return rng.integers(l, size=n)


def baseline_most_frequent(ref_labels: np.ndarray) -> EvalReport:
    """Report of predicting the modal reference label everywhere.

    Accuracy equals the modal label's frequency exactly.  Uses reference
    label statistics, so it is a diagnostic ceiling for constant
    predictors, not an unsupervised method.
    """
    ref = as_int_array(ref_labels, "ref_labels")
    if ref.size == 0:
        raise ValueError("need at least one label")
    l = int(ref.max()) + 1
    modal = int(np.argmax(np.bincount(ref)))
    pred = np.full(ref.size, modal)
    return evaluate(pred, ref, l)


def ensemble_vote(
    predictions: list[np.ndarray],
    probabilities: list[np.ndarray] | None = None,
) -> np.ndarray:
    """Per-position majority vote across models.

    Ties break by the summed per-model probability of the tied ids when
    ``probabilities`` is given, then by the lowest id.
    """
    if not predictions:
        raise ValueError("need at least one model")
    preds = [as_int_array(p, "predictions") for p in predictions]
    n = preds[0].size
    if any(p.size != n for p in preds):
        raise ValueError(f"prediction lengths differ: {[p.size for p in preds]}")
    if probabilities is not None and len(probabilities) != len(preds):
        raise ValueError("one probability matrix per model required")

    stacked = np.stack(preds)  # (models, N)
    n_ids = int(stacked.max()) + 1
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        counts = np.bincount(stacked[:, i], minlength=n_ids)
        top = counts.max()
        tied = np.flatnonzero(counts == top)
        if tied.size == 1 or probabilities is None:
            out[i] = tied[0]
        else:
            scores = sum(prob[i, tied] for prob in probabilities)
            out[i] = tied[int(np.argmax(scores))]
    return out


def write_report(path: str | Path, report: EvalReport) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), sort_keys=True) + "\n")


def read_report(path: str | Path) -> EvalReport:
    return EvalReport.from_dict(json.loads(Path(path).read_text()))
