"""Synthetic worlds with known ground truth.

A world fixes a phoneme inventory of size L, one or more prototype
vectors per phoneme (modes), an emission noise level, and a bigram
transition matrix.  Corpora drawn from a world come with their hidden
labels, so purity, decode accuracy, and every trend in the pipeline can
be measured against an exact oracle at desk scale.

Phoneme names are zero-padded (``p00``, ``p01``, ...) so their sorted
order equals their id order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import UtteranceFeatures
from .nn.rng import derive_seed, new_rng
from .validation import as_int_array

__all__ = [
    "World",
    "SynthCorpus",
    "gen_world",
    "gen_corpus",
    "gen_text",
    "phoneme_names",
    "oracle_best_map",
]


def phoneme_names(l: int) -> list[str]:
    width = max(2, len(str(l - 1)))
    return [f"p{i:0{width}d}" for i in range(l)]


@dataclass
class World:
    """Generative ground truth: prototypes per phoneme plus a bigram chain."""

    l: int
    modes_per_phoneme: int
    prototypes: np.ndarray
    noise_sigma: float
    bigram: np.ndarray
    seed: int

    @property
    def dim(self) -> int:
        return self.prototypes.shape[1]

    @property
    def names(self) -> list[str]:
        return phoneme_names(self.l)


@dataclass
class SynthCorpus:
    """Drawn utterances: embeddings or frames, hidden labels, matched text."""

    labels: list[np.ndarray]
    sentences: list[str]
    embeddings: list[np.ndarray] | None = None
    features: list[UtteranceFeatures] | None = None


def gen_world(
    seed: int,
    l: int = 10,
    modes: int = 1,
    d: int = 8,
    sigma: float = 0.1,
    min_proto_gap: float = 2.0,
    max_attempts: int | None = None,
) -> World:
    """Sample a world whose prototypes are pairwise at least ``min_proto_gap`` apart.

    Prototypes are rejection-sampled from a scaled normal; generation
    fails if the requested packing cannot be placed within the attempt
    bound (1000 draws per prototype unless overridden).  The bigram
    matrix has full support.
    """
    if l < 2:
        raise ValueError(f"need at least 2 phonemes, got {l}")
    if modes < 1:
        raise ValueError(f"modes must be >= 1, got {modes}")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    rng = new_rng(derive_seed(seed, "world"))

    count = l * modes
    scale = max(min_proto_gap, 1.0) * count ** (1.0 / d)
    prototypes = np.empty((count, d))
    placed = 0
    attempts = 0
    if max_attempts is None:
        max_attempts = 1000 * count
    while placed < count:
        attempts += 1
        if attempts > max_attempts:
            raise ValueError(
                f"could not place {count} prototypes with gap {min_proto_gap} "
                f"in {max_attempts} attempts; loosen the packing"
            )
        candidate = scale * rng.normal(size=d)
        if placed:
            gaps = np.sqrt(np.sum((prototypes[:placed] - candidate) ** 2, axis=1))
            if gaps.min() < min_proto_gap:
                continue
        prototypes[placed] = candidate
        placed += 1

    # strong row contrast keeps permuted mappings distinguishable while
    # every transition stays possible
    bigram = rng.uniform(0.05, 1.0, size=(l, l)) ** 2
    bigram /= bigram.sum(axis=1, keepdims=True)
    return World(
        l=l,
        modes_per_phoneme=modes,
        prototypes=prototypes,
        noise_sigma=sigma,
        bigram=bigram,
        seed=seed,
    )


def _draw_chain(world: World, length: int, rng: np.random.Generator) -> np.ndarray:
    seq = np.empty(length, dtype=np.int64)
    seq[0] = rng.integers(world.l)
    for i in range(1, length):
        seq[i] = rng.choice(world.l, p=world.bigram[seq[i - 1]])
    return seq


def _sentence(world: World, seq: np.ndarray) -> str:
    names = world.names
    return " ".join(names[i] for i in seq)


def gen_corpus(
    world: World,
    n_utts: int,
    len_range: tuple[int, int] = (8, 20),
    seed: int = 0,
    emit: str = "embeddings",
    frames_per_segment: tuple[int, int] = (2, 5),
) -> SynthCorpus:
    """Draw utterances from the world's bigram chain.

    Each phoneme occurrence picks one of its modes uniformly and emits
    either one embedding (``emit="embeddings"``) or a short run of frames
    (``emit="frames"``), both centered on the chosen prototype with
    isotropic noise ``sigma``.  The matched text is exactly the
    generating phoneme sequence per utterance.
    """
    if n_utts < 1:
        raise ValueError(f"n_utts must be >= 1, got {n_utts}")
    if emit not in ("embeddings", "frames"):
        raise ValueError(f"emit must be 'embeddings' or 'frames', got {emit!r}")
    lo, hi = len_range
    if not 1 <= lo <= hi:
        raise ValueError(f"bad len_range {len_range}")
    rng = new_rng(derive_seed(seed, "corpus"))

    labels: list[np.ndarray] = []
    sentences: list[str] = []
    embeddings: list[np.ndarray] = []
    features: list[UtteranceFeatures] = []

    for u in range(n_utts):
        length = int(rng.integers(lo, hi + 1))
        seq = _draw_chain(world, length, rng)
        modes = rng.integers(world.modes_per_phoneme, size=length)
        protos = world.prototypes[seq * world.modes_per_phoneme + modes]
        labels.append(seq)
        sentences.append(_sentence(world, seq))

        if emit == "embeddings":
            noise = world.noise_sigma * rng.normal(size=protos.shape)
            embeddings.append(protos + noise)
        else:
            flo, fhi = frames_per_segment
            seg_lens = rng.integers(flo, fhi + 1, size=length)
            frames = []
            for center, t in zip(protos, seg_lens):
                frames.append(center + world.noise_sigma * rng.normal(size=(t, world.dim)))
            boundaries = np.concatenate([[0], np.cumsum(seg_lens)])
            features.append(
                UtteranceFeatures(
                    id=f"synth-{u:05d}",
                    frames=np.concatenate(frames),
                    boundaries=boundaries,
                    labels=seq,
                )
            )

    return SynthCorpus(
        labels=labels,
        sentences=sentences,
        embeddings=embeddings if emit == "embeddings" else None,
        features=features if emit == "frames" else None,
    )


def gen_text(
    world: World,
    n_sentences: int,
    len_range: tuple[int, int] = (8, 20),
    seed: int = 0,
) -> list[str]:
    """Sentences drawn independently from the same bigram chain.

    Shares the world's phoneme statistics but none of its utterances:
    the unrelated-text condition.
    """
    rng = new_rng(derive_seed(seed, "text"))
    lo, hi = len_range
    out = []
    for _ in range(n_sentences):
        length = int(rng.integers(lo, hi + 1))
        out.append(_sentence(world, _draw_chain(world, length, rng)))
    return out


def oracle_best_map(indices: np.ndarray, labels: np.ndarray) -> tuple[dict[int, int], float]:
    """Majority-vote cluster-to-phoneme map and its exact accuracy.

    The accuracy equals cluster purity by construction and is the ceiling
    for any per-cluster decoding.
    """
    idx = as_int_array(indices, "indices")
    lab = as_int_array(labels, "labels")
    if idx.size == 0:
        raise ValueError("cannot build a map from an empty sequence")
    if idx.shape != lab.shape:
        raise ValueError(f"length mismatch: {idx.shape} indices vs {lab.shape} labels")
    mapping: dict[int, int] = {}
    correct = 0
    for c in np.unique(idx):
        counts = np.bincount(lab[idx == c])
        mapping[int(c)] = int(np.argmax(counts))
        correct += int(counts.max())
    return mapping, correct / idx.size
