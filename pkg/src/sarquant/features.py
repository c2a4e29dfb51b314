"""Sentence-to-vector conversion.

Two backends: a dependency-free hashed character-n-gram vectorizer
(FNV-1a 64-bit, fixed dimension, unit-norm) and an imported embedding
table keyed by example id (the frozen-encoder route).  Both are pure:
the same input always yields the same vector, on any platform.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

FNV64_OFFSET_BASIS = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_FNV64_MASK = 0xFFFFFFFFFFFFFFFF

#: Arabic tatweel (kashida) elongation character.
TATWEEL = "ـ"
#: Arabic diacritic (tashkeel) code points: fathatan..sukun plus superscript alef.
DIACRITICS = frozenset(chr(cp) for cp in range(0x064B, 0x0653)) | {"ٰ"}

_WHITESPACE_RUN = re.compile(r"\s+")


class EmbeddingFormatError(ValueError):
    """Malformed embeddings file."""


@dataclass(frozen=True)
class NormalizeOptions:
    """Optional text clean-up steps; everything defaults to off (identity)."""

    strip_diacritics: bool = False
    strip_tatweel: bool = False
    collapse_whitespace: bool = False


@dataclass(frozen=True)
class FeatureConfig:
    backend: str = "hashed"  # "hashed" | "embeddings"
    dim: int = 4096
    ngram_min: int = 3
    ngram_max: int = 5
    normalize: NormalizeOptions = field(default_factory=NormalizeOptions)

    def __post_init__(self):
        if self.backend not in ("hashed", "embeddings"):
            raise ValueError(f"unknown feature backend {self.backend!r}")
        if self.dim < 1:
            raise ValueError("feature dimension must be >= 1")
        if not 1 <= self.ngram_min <= self.ngram_max:
            raise ValueError(
                f"invalid n-gram range [{self.ngram_min}, {self.ngram_max}]"
            )


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray]

    def __contains__(self, example_id: str) -> bool:
        return example_id in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


def normalize_text(text: str, options: NormalizeOptions = NormalizeOptions()) -> str:
    """Apply the enabled clean-up steps; with all options off this is the identity."""
    if options.strip_tatweel:
        text = text.replace(TATWEEL, "")
    if options.strip_diacritics:
        text = "".join(ch for ch in text if ch not in DIACRITICS)
    if options.collapse_whitespace:
        text = _WHITESPACE_RUN.sub(" ", text)
    return text


def char_ngrams(text: str, n_min: int, n_max: int) -> list[str]:
    """All contiguous code-point n-grams for each n in [n_min, n_max].

    Text shorter than n contributes nothing for that n; repeats are kept
    (the result is a multiset).
    """
    if n_min < 1:
        raise ValueError("n_min must be >= 1")
    if n_min > n_max:
        raise ValueError("n_min must be <= n_max")
    grams: list[str] = []
    length = len(text)
    for n in range(n_min, n_max + 1):
        for start in range(length - n + 1):
            grams.append(text[start : start + n])
    return grams


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash over bytes (platform-stable integer arithmetic)."""
    h = FNV64_OFFSET_BASIS
    for byte in data:
        h ^= byte
        h = (h * FNV64_PRIME) & _FNV64_MASK
    return h


def hash_featurize(text: str, config: FeatureConfig) -> np.ndarray:
    """Hashed n-gram count vector, scaled to unit Euclidean norm.

    Each n-gram g increments index fnv1a64(utf8(g)) mod dim.  An input
    with no grams (too short) stays the all-zero vector.
    """
    if config.backend != "hashed":
        raise ValueError("hash_featurize requires the 'hashed' backend")
    text = normalize_text(text, config.normalize)
    vector = np.zeros(config.dim, dtype=np.float64)
    for gram in char_ngrams(text, config.ngram_min, config.ngram_max):
        vector[fnv1a64(gram.encode("utf-8")) % config.dim] += 1.0
    norm = math.sqrt(float(np.dot(vector, vector)))
    if norm > 0.0:
        vector /= norm
    return vector


def load_embedding_table(path: str | os.PathLike) -> EmbeddingTable:
    """Load a tab-separated embeddings file (header "dim<TAB>D", rows "id<TAB>v1,...")."""
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as handle:
        header = handle.readline()
        parts = header.rstrip("\n").split("\t")
        if len(parts) != 2 or parts[0] != "dim":
            raise EmbeddingFormatError(
                'missing header: first line must be "dim<TAB>D"'
            )
        try:
            dim = int(parts[1])
        except ValueError:
            raise EmbeddingFormatError(f"bad dimension {parts[1]!r} in header") from None
        if dim < 1:
            raise EmbeddingFormatError(f"dimension must be >= 1, got {dim}")

        for line_number, line in enumerate(handle, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            row_id, sep, values_str = line.partition("\t")
            if not sep or not row_id:
                raise EmbeddingFormatError(
                    f"line {line_number}: expected 'id<TAB>values'"
                )
            if row_id in vectors:
                raise EmbeddingFormatError(
                    f"line {line_number}: duplicate id {row_id!r}"
                )
            try:
                values = np.array(
                    [float(v) for v in values_str.split(",")], dtype=np.float64
                )
            except ValueError:
                raise EmbeddingFormatError(
                    f"line {line_number}: non-numeric value for id {row_id!r}"
                ) from None
            if values.shape[0] != dim:
                raise EmbeddingFormatError(
                    f"line {line_number}: vector length {values.shape[0]} != dim {dim}"
                    f" for id {row_id!r}"
                )
            if not np.all(np.isfinite(values)):
                raise EmbeddingFormatError(
                    f"line {line_number}: non-finite value for id {row_id!r}"
                )
            vectors[row_id] = values
    return EmbeddingTable(dim=dim, vectors=vectors)


def save_embedding_table(
    path: str | os.PathLike, dim: int, rows: Iterable[tuple[str, np.ndarray]]
) -> None:
    """Write an embeddings file in the format load_embedding_table reads."""
    from ._util import atomic_writer

    with atomic_writer(path) as handle:
        handle.write(f"dim\t{dim}\n")
        for row_id, vector in rows:
            values = ",".join(repr(float(v)) for v in vector)
            handle.write(f"{row_id}\t{values}\n")


def featurize(example, config: FeatureConfig, table: EmbeddingTable | None = None) -> np.ndarray:
    """Feature vector for one example: hashed text or embedding lookup by id."""
    if config.backend == "hashed":
        return hash_featurize(example.text, config)
    if table is None:
        raise ValueError("embeddings backend requires an embedding table")
    if example.id not in table.vectors:
        raise KeyError(f"no embedding for id {example.id}")
    return table.vectors[example.id]


def featurize_corpus(
    examples, config: FeatureConfig, table: EmbeddingTable | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Stack per-example features into (X, y) training arrays."""
    dim = table.dim if config.backend == "embeddings" and table is not None else config.dim
    X = np.zeros((len(examples), dim), dtype=np.float64)
    y = np.zeros(len(examples), dtype=np.float64)
    for i, example in enumerate(examples):
        X[i] = featurize(example, config, table)
        y[i] = example.label
    return X, y
