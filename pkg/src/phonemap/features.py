"""Per-utterance feature handling: normalization, segmentation, file IO.

An utterance is a ``(T, d)`` frame matrix plus a strictly increasing list
of boundary frame indices delimiting its segments.  Frames before the
first boundary and after the last are treated as silence and dropped at
segmentation time.  The on-disk format is JSON lines, one utterance per
line::

    {"id": "utt1", "frames": [[...], ...], "boundaries": [0, 4, 10],
     "labels": [3, 7]}          # labels optional, one per segment
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .validation import as_float_matrix, as_int_array, check_finite

__all__ = [
    "UtteranceFeatures",
    "cmvn",
    "segment_utterance",
    "read_features",
    "write_features",
    "read_embeddings",
    "write_embeddings",
]

_ZERO_VAR = 1e-24


@dataclass
class UtteranceFeatures:
    """One utterance: frames, segment boundaries, optional per-segment labels."""

    id: str
    frames: np.ndarray
    boundaries: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.frames = as_float_matrix(self.frames, "frames")
        self.boundaries = as_int_array(self.boundaries, "boundaries")
        t = self.frames.shape[0]
        b = self.boundaries
        if b.size < 2:
            raise ValueError(f"utterance {self.id!r}: need at least 2 boundaries, got {b.size}")
        if b[0] < 0 or b[-1] > t:
            raise ValueError(
                f"utterance {self.id!r}: boundaries must lie in [0, {t}], got "
                f"[{b[0]}, {b[-1]}]"
            )
        if np.any(np.diff(b) <= 0):
            raise ValueError(f"utterance {self.id!r}: boundaries must be strictly increasing")
        if self.labels is not None:
            self.labels = as_int_array(self.labels, "labels")
            if self.labels.size != self.num_segments:
                raise ValueError(
                    f"utterance {self.id!r}: {self.labels.size} labels for "
                    f"{self.num_segments} segments"
                )

    @property
    def num_segments(self) -> int:
        return self.boundaries.size - 1


def cmvn(utt: UtteranceFeatures) -> UtteranceFeatures:
    """Normalize each feature dimension to zero mean, unit variance.

    Statistics are per utterance over its own frames (population
    variance).  Dimensions with zero variance are mean-centered and left
    with a unit divisor.  Requires at least two frames.
    """
    frames = utt.frames
    if frames.shape[0] < 2:
        raise ValueError(
            f"utterance {utt.id!r}: CMVN needs at least 2 frames, got {frames.shape[0]}"
        )
    check_finite(frames, f"utterance {utt.id!r} frames")
    mean = frames.mean(axis=0)
    var = frames.var(axis=0)
    scale = np.where(var <= _ZERO_VAR, 1.0, np.sqrt(var))
    return UtteranceFeatures(
        id=utt.id,
        frames=(frames - mean) / scale,
        boundaries=utt.boundaries,
        labels=utt.labels,
    )


def segment_utterance(utt: UtteranceFeatures) -> list[np.ndarray]:
    """Slice the frame matrix into its segments.

    Frames outside [first boundary, last boundary) are discarded; the
    concatenation of the returned segments equals the frames in between.
    """
    b = utt.boundaries
    return [utt.frames[b[i] : b[i + 1]] for i in range(utt.num_segments)]


def read_features(path: str | Path) -> list[UtteranceFeatures]:
    """Load utterances from a JSON-lines feature file."""
    utts = []
    path = Path(path)
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                utts.append(
                    UtteranceFeatures(
                        id=str(rec["id"]),
                        frames=rec["frames"],
                        boundaries=rec["boundaries"],
                        labels=rec.get("labels"),
                    )
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad utterance record: {exc}") from exc
    return utts


def write_features(path: str | Path, utts: list[UtteranceFeatures]) -> None:
    with Path(path).open("w") as fh:
        for utt in utts:
            rec = {
                "id": utt.id,
                "frames": utt.frames.tolist(),
                "boundaries": utt.boundaries.tolist(),
            }
            if utt.labels is not None:
                rec["labels"] = utt.labels.tolist()
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def write_embeddings(
    path: str | Path,
    ids: list[str],
    embeddings: list[np.ndarray],
    labels: list[np.ndarray] | None = None,
) -> None:
    """Write per-utterance segment embeddings as JSON lines.

    Each line holds ``{"id", "embeddings": [[f64,...],...]}`` plus an
    optional ``"labels"`` list aligned with the embedding rows.
    """
    if len(ids) != len(embeddings):
        raise ValueError(f"{len(ids)} ids but {len(embeddings)} embedding sequences")
    if labels is not None and len(labels) != len(ids):
        raise ValueError(f"{len(ids)} ids but {len(labels)} label sequences")
    with Path(path).open("w") as fh:
        for i, (utt_id, emb) in enumerate(zip(ids, embeddings)):
            emb = np.asarray(emb, dtype=np.float64)
            rec = {"id": str(utt_id), "embeddings": emb.tolist()}
            if labels is not None:
                lab = np.asarray(labels[i], dtype=np.int64)
                if lab.size != emb.shape[0]:
                    raise ValueError(
                        f"utterance {utt_id!r}: {emb.shape[0]} embeddings "
                        f"but {lab.size} labels"
                    )
                rec["labels"] = lab.tolist()
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_embeddings(
    path: str | Path,
) -> tuple[list[str], list[np.ndarray], list[np.ndarray] | None]:
    """Load an embeddings JSON-lines file; labels are None if any line lacks them."""
    ids: list[str] = []
    embeddings: list[np.ndarray] = []
    labels: list[np.ndarray] = []
    have_labels = True
    path = Path(path)
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                emb = np.asarray(rec["embeddings"], dtype=np.float64)
                if emb.ndim != 2 or emb.shape[0] < 1:
                    raise ValueError(f"embeddings must be a non-empty matrix, got {emb.shape}")
                ids.append(str(rec["id"]))
                embeddings.append(emb)
                if "labels" in rec:
                    lab = np.asarray(rec["labels"], dtype=np.int64)
                    if lab.size != emb.shape[0]:
                        raise ValueError(
                            f"{lab.size} labels for {emb.shape[0]} embeddings"
                        )
                    labels.append(lab)
                else:
                    have_labels = False
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad embeddings record: {exc}") from exc
    if not ids:
        raise ValueError(f"{path}: no embeddings records")
    return ids, embeddings, labels if have_labels else None
