"""Sarcasm quantification toolkit.

Collects multi-annotator binary sarcasm judgments, aggregates them into
continuous sarcasm levels, and trains/evaluates a sigmoid-output
feed-forward regressor over sentence feature vectors.
"""

from .corpus import (
    Category,
    CorpusFormatError,
    CorpusStats,
    LabeledExample,
    VoteRecord,
    aggregate_corpus,
    aggregate_label,
    binarize,
    corpus_stats,
    format_label,
    load_corpus,
    load_vote_records,
    parse_label_string,
    parse_vote_record,
    save_corpus,
)
from .evaluation import CvReport, FoldPlan, cross_validate, evaluate, kfold_indices, render_report
from .features import (
    EmbeddingTable,
    FeatureConfig,
    NormalizeOptions,
    char_ngrams,
    featurize,
    featurize_corpus,
    fnv1a64,
    hash_featurize,
    load_embedding_table,
    normalize_text,
)
from .model import (
    AdamState,
    RegressorParams,
    TrainConfig,
    TrainResult,
    adam_step,
    backward,
    forward,
    grad_check,
    init_model,
    load_model,
    mse_loss,
    predict,
    save_model,
    sigmoid,
    train,
)
from .service import AnnotationService, EventLog, Progress, read_events

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "AnnotationService",
    "Category",
    "CorpusFormatError",
    "CorpusStats",
    "CvReport",
    "EmbeddingTable",
    "EventLog",
    "FeatureConfig",
    "FoldPlan",
    "LabeledExample",
    "NormalizeOptions",
    "Progress",
    "RegressorParams",
    "TrainConfig",
    "TrainResult",
    "VoteRecord",
    "adam_step",
    "aggregate_corpus",
    "aggregate_label",
    "backward",
    "binarize",
    "char_ngrams",
    "corpus_stats",
    "cross_validate",
    "evaluate",
    "featurize",
    "featurize_corpus",
    "fnv1a64",
    "format_label",
    "forward",
    "grad_check",
    "hash_featurize",
    "init_model",
    "kfold_indices",
    "load_corpus",
    "load_embedding_table",
    "load_model",
    "load_vote_records",
    "mse_loss",
    "normalize_text",
    "parse_label_string",
    "parse_vote_record",
    "predict",
    "read_events",
    "render_report",
    "save_corpus",
    "save_model",
    "sigmoid",
    "train",
]
