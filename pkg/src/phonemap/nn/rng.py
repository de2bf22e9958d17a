"""Seeded random number generation.

All randomness in this package flows through explicit
``numpy.random.Generator`` objects owned by the caller; there is no
global RNG.  A pipeline run starts from one root seed and derives one
child seed per stage with :func:`derive_seed`, so re-running any stage
with the same root seed reproduces its draws bit for bit.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["new_rng", "derive_seed", "gumbel_noise"]

# Uniform draws are clamped away from {0, 1} before the double log so
# gumbel noise stays finite.
_UNIFORM_EPS = 1e-12


def new_rng(seed: int) -> np.random.Generator:
    """Return a PCG64 generator seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(root_seed: int, label: str) -> int:
    """Derive a per-stage child seed from a root seed and a stage label.

    The derivation is ``SeedSequence([root_seed, crc32(label)])``, which
    is stable across runs and platforms.  Distinct labels give
    statistically independent streams.
    """
    entropy = [int(root_seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(label.encode("utf-8"))]
    seq = np.random.SeedSequence(entropy)
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def gumbel_noise(rng: np.random.Generator, shape) -> np.ndarray:
    """Sample standard Gumbel noise, ``-log(-log(u))`` with clamped u."""
    u = rng.random(shape)
    u = np.clip(u, _UNIFORM_EPS, 1.0 - _UNIFORM_EPS)
    return -np.log(-np.log(u))
