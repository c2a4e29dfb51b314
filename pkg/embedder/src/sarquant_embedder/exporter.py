"""Turn a sentences file into an embeddings file.

Input: JSON Lines with at least {"id", "text"} per line (aggregated
corpora and votes files both qualify).  Output: the tab-separated
embeddings format consumed by the sarquant feature pipeline —
``dim<TAB>D`` header, then ``id<TAB>v1,...,vD`` rows in input order —
plus a ``<out>.meta`` sidecar recording the encoder and pooling choice.
Runs are deterministic for a fixed encoder: no timestamps, no sampling.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .encoders import resolve_encoder

POOLINGS = ("mean", "first-token")


class ExportError(ValueError):
    """Malformed input or inconsistent export request."""


@dataclass(frozen=True)
class ExportJob:
    input_path: str
    output_path: str
    encoder: str = "hashed:64"
    pooling: str = "mean"
    batch_size: int = 32

    def __post_init__(self):
        if self.pooling not in POOLINGS:
            raise ExportError(f"pooling must be one of {POOLINGS}, got {self.pooling!r}")
        if self.batch_size < 1:
            raise ExportError("batch_size must be >= 1")


def read_sentences(path: str | os.PathLike) -> list[tuple[str, str]]:
    """(id, text) pairs in file order; duplicate ids are an error."""
    pairs: list[tuple[str, str]] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExportError(f"line {line_number}: malformed JSON: {exc.msg}") from None
            if not isinstance(obj, dict) or "id" not in obj:
                raise ExportError(f"line {line_number}: missing field 'id'")
            if "text" not in obj or not isinstance(obj["text"], str):
                raise ExportError(f"line {line_number}: missing text field")
            sid = obj["id"]
            if not isinstance(sid, str) or not sid:
                raise ExportError(f"line {line_number}: field 'id' must be a non-empty string")
            if sid in seen:
                raise ExportError(f"line {line_number}: id collision for {sid!r}")
            seen.add(sid)
            pairs.append((sid, obj["text"]))
    return pairs


def _pool(rows: np.ndarray, pooling: str) -> np.ndarray:
    if pooling == "mean":
        return rows.mean(axis=0)
    return rows[0]


def embed_file(job: ExportJob) -> int:
    """Run the export; returns the number of rows written."""
    encoder = resolve_encoder(job.encoder)
    sentences = read_sentences(job.input_path)

    vectors: list[tuple[str, np.ndarray]] = []
    for start in range(0, len(sentences), job.batch_size):
        for sid, text in sentences[start : start + job.batch_size]:
            pooled = _pool(encoder.encode_tokens(text), job.pooling)
            if not np.all(np.isfinite(pooled)):
                raise ExportError(f"encoder produced a non-finite vector for id {sid!r}")
            vectors.append((sid, pooled))

    dim = encoder.dim
    for sid, vector in vectors:
        if vector.shape != (dim,):
            raise ExportError(
                f"encoder dimension drifted: id {sid!r} got {vector.shape}, expected ({dim},)"
            )

    _atomic_write(
        job.output_path,
        "".join(
            [f"dim\t{dim}\n"]
            + [f"{sid}\t{','.join(repr(float(v)) for v in vec)}\n" for sid, vec in vectors]
        ),
    )
    _atomic_write(
        job.output_path + ".meta",
        f"# encoder={job.encoder}\n# pooling={job.pooling}\n# rows={len(vectors)}\n# dim={dim}\n",
    )
    return len(vectors)


def _atomic_write(path: str, content: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(content)
        os.replace(tmp_path, path)
    except BaseException:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise
