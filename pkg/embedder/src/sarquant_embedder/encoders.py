"""Sentence encoders behind the exporter.

An encoder turns one sentence into a (tokens, dim) array of per-token
vectors; the exporter pools those rows into a single sentence vector.
Two families are supported:

- ``hashed:<dim>``: a dependency-free deterministic encoder (hashed
  character trigrams per whitespace token).  Useful for desk-scale runs
  and tests, and as a stand-in when no pretrained checkpoint is local.
- ``hf:<model-id>``: final-layer hidden states of a Hugging Face
  transformer (loaded lazily; inference only, no sampling).
"""

from __future__ import annotations

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_FNV_MASK = 0xFFFFFFFFFFFFFFFF


class EncoderLoadError(RuntimeError):
    """The requested encoder could not be constructed."""


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _FNV_MASK
    return h


class HashedNgramEncoder:
    """Deterministic per-token vectors from hashed character trigrams."""

    def __init__(self, dim: int):
        if dim < 1:
            raise EncoderLoadError(f"hashed encoder dimension must be >= 1, got {dim}")
        self.dim = dim

    def encode_tokens(self, text: str) -> np.ndarray:
        tokens = text.split()
        if not tokens:
            return np.zeros((1, self.dim), dtype=np.float64)
        rows = np.zeros((len(tokens), self.dim), dtype=np.float64)
        for i, token in enumerate(tokens):
            grams = (
                [token[j : j + 3] for j in range(len(token) - 2)]
                if len(token) >= 3
                else [token]
            )
            for gram in grams:
                rows[i, _fnv1a64(gram.encode("utf-8")) % self.dim] += 1.0
            norm = np.linalg.norm(rows[i])
            if norm > 0:
                rows[i] /= norm
        return rows


class TransformersEncoder:
    """Per-token final-layer hidden states from a frozen transformer."""

    def __init__(self, model_id: str):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise EncoderLoadError(
                f"transformers backend unavailable: {exc}"
            ) from exc
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(model_id)
            self._model = AutoModel.from_pretrained(model_id)
        except Exception as exc:
            raise EncoderLoadError(f"cannot load encoder {model_id!r}: {exc}") from exc
        self._model.eval()
        self._torch = torch
        self.dim = int(self._model.config.hidden_size)

    def encode_tokens(self, text: str) -> np.ndarray:
        torch = self._torch
        inputs = self._tokenizer(text, return_tensors="pt", truncation=True)
        with torch.no_grad():
            hidden = self._model(**inputs).last_hidden_state[0]
        return hidden.numpy().astype(np.float64)


def resolve_encoder(encoder_id: str):
    """Build an encoder from its identifier string."""
    kind, sep, rest = encoder_id.partition(":")
    if not sep:
        raise EncoderLoadError(
            f"bad encoder id {encoder_id!r}: expected 'hashed:<dim>' or 'hf:<model>'"
        )
    if kind == "hashed":
        try:
            dim = int(rest)
        except ValueError:
            raise EncoderLoadError(f"bad hashed encoder dimension {rest!r}") from None
        return HashedNgramEncoder(dim)
    if kind == "hf":
        if not rest:
            raise EncoderLoadError("hf encoder id needs a model name")
        return TransformersEncoder(rest)
    raise EncoderLoadError(f"unknown encoder family {kind!r}")
