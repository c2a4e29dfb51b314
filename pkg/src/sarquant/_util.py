"""Small shared helpers: labeled seed derivation and atomic file writes."""

from __future__ import annotations

import hashlib
import os
import tempfile
from contextlib import contextmanager
from typing import Iterator, TextIO


def derive_seed(seed: int, label: str) -> int:
    """Derive an independent 64-bit seed from (seed, label).

    Labeled hashing keeps the random streams of unrelated components
    (init vs. shuffle vs. fold i) decoupled: adding a consumer never
    shifts another consumer's stream.
    """
    digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@contextmanager
def atomic_writer(path: str | os.PathLike, encoding: str = "utf-8") -> Iterator[TextIO]:
    """Write to a temp file in the target directory, rename on success.

    On any exception the temp file is removed and the destination is
    left untouched, so consumers never observe partial output.
    """
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding=encoding, newline="\n") as handle:
            yield handle
        os.replace(tmp_path, path)
    except BaseException:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise
