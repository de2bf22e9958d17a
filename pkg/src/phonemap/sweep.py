"""Cluster-count sweep: the purity-versus-accuracy table across K values."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .clustering import assign, kmeans_fit, purity
from .mapping import GanConfig, decode, train
from .nn.rng import derive_seed

__all__ = ["SweepRow", "SWEEP_HEADER", "sweep_point", "sweep_clusters", "write_sweep", "read_sweep"]

SWEEP_HEADER = (
    "k,purity_train,purity_test,"
    "acc_softmax_train,acc_softmax_test,acc_gumbel_train,acc_gumbel_test"
)


@dataclass
class SweepRow:
    """One K's numbers; purity bounds every accuracy on the same split."""

    k: int
    purity_train: float
    purity_test: float
    acc_softmax_train: float
    acc_softmax_test: float
    acc_gumbel_train: float
    acc_gumbel_test: float


def _audit(row: SweepRow) -> SweepRow:
    """Hard bound check: per-cluster decoding can never beat purity.

    Purity maximizes accuracy over all per-cluster maps on the same split,
    so a violation means the pipeline itself is broken, not the data.
    """
    violations = [
        name
        for name, acc, cap in (
            ("acc_softmax_train", row.acc_softmax_train, row.purity_train),
            ("acc_gumbel_train", row.acc_gumbel_train, row.purity_train),
            ("acc_softmax_test", row.acc_softmax_test, row.purity_test),
            ("acc_gumbel_test", row.acc_gumbel_test, row.purity_test),
        )
        if acc > cap
    ]
    if violations:
        raise RuntimeError(
            f"sweep audit failed at k={row.k}: {', '.join(violations)} exceeded purity"
        )
    return row


def sweep_point(
    k: int,
    train_embeddings: list[np.ndarray],
    train_labels: list[np.ndarray],
    test_embeddings: list[np.ndarray],
    test_labels: list[np.ndarray],
    text: list[np.ndarray],
    config: GanConfig,
    seed: int = 0,
) -> SweepRow:
    """Full pipeline at one K: cluster, train both modes, score both splits.

    The codebook and both mappings are fitted on the training split only.
    """
    flat_train = np.concatenate(train_embeddings)
    codebook = kmeans_fit(flat_train, k=k, seed=derive_seed(seed, f"kmeans-k{k}"))
    train_seqs = [assign(e, codebook) for e in train_embeddings]
    test_seqs = [assign(e, codebook) for e in test_embeddings]
    train_ref = np.concatenate(train_labels)
    test_ref = np.concatenate(test_labels)
    purity_train = purity(np.concatenate(train_seqs), train_ref)
    purity_test = purity(np.concatenate(test_seqs), test_ref)

    accs = {}
    for mode in ("softmax", "gumbel"):
        cfg = replace(config, k=k, mode=mode, seed=derive_seed(seed, f"gan-k{k}-{mode}"))
        table, _ = train(train_seqs, text, cfg)
        for split, seqs, ref in (
            ("train", train_seqs, train_ref),
            ("test", test_seqs, test_ref),
        ):
            pred = np.concatenate([decode(s, table) for s in seqs])
            accs[f"acc_{mode}_{split}"] = float((pred == ref).mean())

    return _audit(
        SweepRow(k=k, purity_train=purity_train, purity_test=purity_test, **accs)
    )


def _sweep_star(args) -> SweepRow:
    return sweep_point(*args)


def sweep_clusters(
    ks: list[int],
    train_embeddings: list[np.ndarray],
    train_labels: list[np.ndarray],
    test_embeddings: list[np.ndarray],
    test_labels: list[np.ndarray],
    text: list[np.ndarray],
    config: GanConfig,
    seed: int = 0,
    jobs: int = 1,
) -> list[SweepRow]:
    """Run :func:`sweep_point` per K; rows come back sorted by K.

    Each point is seeded independently, so the table is identical whether
    points run inline or across ``jobs`` worker processes.
    """
    if not ks:
        raise ValueError("need at least one K value")
    if len(set(ks)) != len(ks):
        raise ValueError(f"duplicate K values: {sorted(ks)}")
    work = [
        (k, train_embeddings, train_labels, test_embeddings, test_labels, text, config, seed)
        for k in ks
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_star, work))
    else:
        rows = [_sweep_star(w) for w in work]
    return sorted(rows, key=lambda r: r.k)


def write_sweep(path: str | Path, rows: list[SweepRow]) -> None:
    lines = [SWEEP_HEADER]
    for r in rows:
        lines.append(
            f"{r.k},{r.purity_train!r},{r.purity_test!r},"
            f"{r.acc_softmax_train!r},{r.acc_softmax_test!r},"
            f"{r.acc_gumbel_train!r},{r.acc_gumbel_test!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_sweep(path: str | Path) -> list[SweepRow]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != SWEEP_HEADER:
        raise ValueError(f"{path}: missing or wrong sweep header")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 7:
            raise ValueError(f"{path}: malformed sweep row: {line!r}")
        rows.append(
            SweepRow(
                k=int(parts[0]),
                purity_train=float(parts[1]),
                purity_test=float(parts[2]),
                acc_softmax_train=float(parts[3]),
                acc_softmax_test=float(parts[4]),
                acc_gumbel_train=float(parts[5]),
                acc_gumbel_test=float(parts[6]),
            )
        )
    return rows
