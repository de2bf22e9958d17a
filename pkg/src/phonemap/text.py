"""Lexicon handling: turning text sentences into phoneme-id sequences.

Lexicon file format is one entry per line, ``word<TAB>PH1 PH2 ...``.
Phoneme ids are positions in the sorted inventory of names appearing in
the lexicon, so the id order is stable across loads of the same file.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["Lexicon", "SkipReport", "load_lexicon", "write_lexicon", "text_to_phonemes", "one_hot"]


@dataclass
class Lexicon:
    """Word pronunciations over a fixed phoneme inventory."""

    entries: dict[str, tuple[int, ...]]
    phoneme_names: list[str]

    def __post_init__(self) -> None:
        if len(set(self.phoneme_names)) != len(self.phoneme_names):
            raise ValueError("phoneme inventory contains duplicate names")
        l = len(self.phoneme_names)
        for word, ids in self.entries.items():
            if any(not 0 <= i < l for i in ids):
                raise ValueError(f"word {word!r} maps outside the {l}-phoneme inventory")

    @property
    def l(self) -> int:
        return len(self.phoneme_names)


@dataclass
class SkipReport:
    """How many sentences were dropped for out-of-lexicon words."""

    n_sentences: int = 0
    n_skipped: int = 0
    unknown_words: set[str] = field(default_factory=set)


def load_lexicon(path: str | Path) -> Lexicon:
    path = Path(path)
    raw: dict[str, list[str]] = {}
    names: set[str] = set()
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'word<TAB>phonemes', got {line!r}")
            word, phones = line.split("\t", 1)
            word = word.strip().lower()
            symbols = phones.split()
            if not word or not symbols:
                raise ValueError(f"{path}:{lineno}: empty word or pronunciation")
            raw[word] = symbols
            names.update(symbols)
    if not raw:
        raise ValueError(f"{path}: lexicon is empty")
    inventory = sorted(names)
    index = {name: i for i, name in enumerate(inventory)}
    entries = {w: tuple(index[s] for s in symbols) for w, symbols in raw.items()}
    return Lexicon(entries=entries, phoneme_names=inventory)


def write_lexicon(path: str | Path, lexicon: Lexicon) -> None:
    with Path(path).open("w") as fh:
        for word in sorted(lexicon.entries):
            phones = " ".join(lexicon.phoneme_names[i] for i in lexicon.entries[word])
            fh.write(f"{word}\t{phones}\n")


def text_to_phonemes(
    sentences: list[str], lexicon: Lexicon
) -> tuple[list[np.ndarray], SkipReport]:
    """Phoneme-id sequence per sentence, skipping sentences with unknown words.

    Words are lowercased and split on whitespace; each kept sentence is
    the concatenation of its words' pronunciations.
    """
    report = SkipReport()
    out: list[np.ndarray] = []
    for sentence in sentences:
        words = sentence.lower().split()
        if not words:
            continue
        report.n_sentences += 1
        unknown = [w for w in words if w not in lexicon.entries]
        if unknown:
            report.n_skipped += 1
            report.unknown_words.update(unknown)
            continue
        ids: list[int] = []
        for w in words:
            ids.extend(lexicon.entries[w])
        out.append(np.asarray(ids, dtype=np.int64))
    if not out:
        raise ValueError(
            f"no usable sentences: {report.n_skipped} of {report.n_sentences} "
            f"skipped for unknown words"
        )
    return out, report


def one_hot(ids: np.ndarray, l: int) -> np.ndarray:
    """(N, L) one-hot rows for a phoneme-id sequence."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= l):
        raise ValueError(f"ids must lie in [0, {l - 1}], got [{ids.min()}, {ids.max()}]")
    rows = np.zeros((ids.size, l))
    rows[np.arange(ids.size), ids] = 1.0
    return rows
