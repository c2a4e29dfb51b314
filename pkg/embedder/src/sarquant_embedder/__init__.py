"""Offline sentence-embedding exporter for the sarquant feature pipeline."""

from .encoders import EncoderLoadError, HashedNgramEncoder, resolve_encoder
from .exporter import ExportError, ExportJob, embed_file, read_sentences

__version__ = "0.1.0"

__all__ = [
    "EncoderLoadError",
    "ExportError",
    "ExportJob",
    "HashedNgramEncoder",
    "embed_file",
    "read_sentences",
    "resolve_encoder",
]
