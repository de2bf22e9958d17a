"""K-means over segment embeddings and cluster purity.

Clusters are numbered 1..K everywhere outside this module's internals so
that a cluster-index sequence can be stored and compared directly against
the trained lookup table, whose rows use the same numbering.

On-disk formats: the codebook is a single JSON object
``{"k", "dim", "centroids"}``; cluster-index sequences are JSON lines
``{"id", "indices": [int, ...]}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .nn.rng import new_rng
from .validation import as_float_matrix, as_int_array, check_finite, check_fitted

__all__ = [
    "Codebook",
    "ClusterIndexSequence",
    "kmeans_fit",
    "assign",
    "purity",
    "SegmentKMeans",
    "read_codebook",
    "write_codebook",
    "read_cluster_sequences",
    "write_cluster_sequences",
]


@dataclass
class Codebook:
    """Fitted centroids plus the fit trace used by monotonicity checks."""

    centroids: np.ndarray
    n_iter: int = 0
    inertia: float = 0.0
    inertia_history: list[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


@dataclass
class ClusterIndexSequence:
    """Per-utterance cluster indices, 1-based, one per segment."""

    id: str
    indices: np.ndarray

    def __post_init__(self) -> None:
        self.indices = as_int_array(self.indices, "indices")


def _squared_distances(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # (N, K) matrix of squared Euclidean distances, clipped against rounding
    d2 = (
        np.sum(x * x, axis=1)[:, None]
        - 2.0 * (x @ centroids.T)
        + np.sum(centroids * centroids, axis=1)[None, :]
    )
    return np.maximum(d2, 0.0)


def _kmeanspp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = x[first]
    d2 = np.sum((x - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with a chosen centroid
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids[j] = x[idx]
        d2 = np.minimum(d2, np.sum((x - centroids[j]) ** 2, axis=1))
    return centroids


def kmeans_fit(
    embeddings: np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> Codebook:
    """Lloyd's algorithm with k-means++ initialization.

    Runs until centroid movement falls below ``tol`` or ``max_iter`` is
    reached.  The recorded within-cluster sum of squares is non-increasing
    across iterations.  An empty cluster is repaired by re-seeding it at
    the point currently farthest from its assigned centroid, so the
    codebook never loses a cluster.
    """
    x = as_float_matrix(embeddings, "embeddings")
    check_finite(x, "embeddings")
    n = x.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n < k:
        raise ValueError(f"need at least k={k} points, got {n}")

    rng = new_rng(seed)
    centroids = _kmeanspp_init(x, k, rng)
    history: list[float] = []
    labels = np.zeros(n, dtype=np.int64)
    n_iter = 0

    for n_iter in range(1, max_iter + 1):
        d2 = _squared_distances(x, centroids)
        labels = np.argmin(d2, axis=1)  # ties resolve to the lowest index
        point_d2 = d2[np.arange(n), labels]
        history.append(float(point_d2.sum()))

        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, x)
        counts = np.bincount(labels, minlength=k)

        empty = np.flatnonzero(counts == 0)
        if empty.size:
            # move each empty centroid onto the worst-served point, drawn
            # only from clusters that can spare one (>= 2 members); such a
            # cluster always exists while any cluster is empty
            farthest = point_d2.copy()
            for j in empty:
                eligible = np.where(counts[labels] > 1, farthest, -1.0)
                idx = int(np.argmax(eligible))
                donor = labels[idx]
                sums[donor] -= x[idx]
                counts[donor] -= 1
                sums[j] = x[idx]
                counts[j] = 1
                labels[idx] = j
                farthest[idx] = 0.0

        new_centroids = sums / counts[:, None]
        movement = float(np.sqrt(np.sum((new_centroids - centroids) ** 2, axis=1)).max())
        centroids = new_centroids
        if movement < tol:
            break

    final_d2 = _squared_distances(x, centroids)
    inertia = float(final_d2[np.arange(n), np.argmin(final_d2, axis=1)].sum())
    return Codebook(centroids=centroids, n_iter=n_iter, inertia=inertia, inertia_history=history)


def assign(embeddings: np.ndarray, codebook: Codebook) -> np.ndarray:
    """Index of the nearest centroid for each embedding, numbered 1..K.

    Equidistant centroids resolve to the lowest index.
    """
    x = as_float_matrix(embeddings, "embeddings")
    if x.shape[1] != codebook.dim:
        raise ValueError(
            f"embedding dim {x.shape[1]} does not match codebook dim {codebook.dim}"
        )
    return np.argmin(_squared_distances(x, codebook.centroids), axis=1) + 1


def purity(indices: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of segments carrying their cluster's most common label.

    Computed in integer arithmetic, so it equals the accuracy of the
    majority-vote cluster-to-label map exactly and upper-bounds the
    accuracy of any per-cluster decoding.
    """
    idx = as_int_array(indices, "indices")
    lab = as_int_array(labels, "labels")
    if idx.size == 0:
        raise ValueError("purity of an empty sequence is undefined")
    if idx.shape != lab.shape:
        raise ValueError(f"length mismatch: {idx.shape} indices vs {lab.shape} labels")
    modal_total = 0
    for c in np.unique(idx):
        counts = np.bincount(lab[idx == c])
        modal_total += int(counts.max())
    return modal_total / idx.size


class SegmentKMeans(ClusterMixin, BaseEstimator):
    """K-means quantizer for segment embeddings with 1-based cluster ids.

    Parameters
    ----------
    n_clusters : int
        Number of clusters K.
    seed : int
        Seed for centroid initialization.
    max_iter : int
        Lloyd iteration cap.
    tol : float
        Stop when no centroid moves farther than this.
    normalize : bool
        If True, L2-normalize embeddings before fitting and prediction.
        Off by default; raw embeddings are the reference behavior.
    """

    def __init__(
        self,
        n_clusters: int = 8,
        seed: int = 0,
        max_iter: int = 300,
        tol: float = 1e-6,
        normalize: bool = False,
    ):
        self.n_clusters = n_clusters
        self.seed = seed
        self.max_iter = max_iter
        self.tol = tol
        self.normalize = normalize

    def _prepare(self, x) -> np.ndarray:
        x = as_float_matrix(x, "X")
        if self.normalize:
            norms = np.sqrt(np.sum(x * x, axis=1, keepdims=True))
            x = x / np.where(norms == 0.0, 1.0, norms)
        return x

    def fit(self, X, y=None):
        x = self._prepare(X)
        book = kmeans_fit(
            x, self.n_clusters, seed=self.seed, max_iter=self.max_iter, tol=self.tol
        )
        self.codebook_ = book
        self.cluster_centers_ = book.centroids
        self.inertia_ = book.inertia
        self.n_iter_ = book.n_iter
        self.labels_ = assign(x, book)
        return self

    def predict(self, X) -> np.ndarray:
        check_fitted(self, "codebook_")
        return assign(self._prepare(X), self.codebook_)

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).labels_


def write_codebook(path: str | Path, codebook: Codebook) -> None:
    rec = {
        "k": codebook.k,
        "dim": codebook.dim,
        "centroids": codebook.centroids.tolist(),
    }
    Path(path).write_text(json.dumps(rec, sort_keys=True) + "\n")


def read_codebook(path: str | Path) -> Codebook:
    rec = json.loads(Path(path).read_text())
    centroids = as_float_matrix(rec["centroids"], "centroids")
    if centroids.shape != (rec["k"], rec["dim"]):
        raise ValueError(
            f"codebook shape {centroids.shape} does not match header "
            f"({rec['k']}, {rec['dim']})"
        )
    return Codebook(centroids=centroids)


def write_cluster_sequences(path: str | Path, seqs: list[ClusterIndexSequence]) -> None:
    with Path(path).open("w") as fh:
        for seq in seqs:
            fh.write(json.dumps({"id": seq.id, "indices": seq.indices.tolist()}) + "\n")


def read_cluster_sequences(path: str | Path) -> list[ClusterIndexSequence]:
    seqs = []
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                seqs.append(ClusterIndexSequence(id=str(rec["id"]), indices=rec["indices"]))
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad cluster record: {exc}") from exc
    return seqs
