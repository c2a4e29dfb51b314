"""Command-line entry point tying the pipeline together.

Subcommands: aggregate, stats, train, cv, predict, gradcheck, serve.
Exit codes: 0 success, 1 usage error, 2 data/validation error.  Output
files are written atomically (temp file + rename), so a failing run
never leaves partial output behind.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import evaluation, features, model, corpus
from ._util import atomic_writer, derive_seed
from .corpus import CorpusFormatError
from .features import EmbeddingFormatError
from .model import ModelFormatError, TrainingDivergedError
from .service import LogCorruptionError, ServiceError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse parser that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_threshold(text: str) -> float:
    """Threshold as a decimal ("0.5") or a fraction ("6/11")."""
    try:
        if "/" in text:
            num, _, den = text.partition("/")
            value = int(num) / int(den)
        else:
            value = float(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"invalid threshold {text!r}") from None
    if not 0.0 < value < 1.0:
        raise UsageError(f"threshold {text!r} outside (0, 1)")
    return value


def _add_feature_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("features")
    group.add_argument("--backend", choices=["hashed", "embeddings"], default="hashed",
                       help="sentence vector backend")
    group.add_argument("--dim", type=int, default=4096,
                       help="hashed feature dimension")
    group.add_argument("--ngram-min", type=int, default=3, help="smallest n-gram")
    group.add_argument("--ngram-max", type=int, default=5, help="largest n-gram")
    group.add_argument("--embeddings", metavar="FILE", default=None,
                       help="embedding table (required for --backend embeddings)")
    group.add_argument("--strip-diacritics", action="store_true",
                       help="drop Arabic diacritics before hashing")
    group.add_argument("--strip-tatweel", action="store_true",
                       help="drop tatweel characters before hashing")
    group.add_argument("--collapse-whitespace", action="store_true",
                       help="collapse whitespace runs before hashing")


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("training")
    group.add_argument("--batch-size", type=int, default=8, help="mini-batch size")
    group.add_argument("--epochs", type=int, default=10, help="training epochs")
    group.add_argument("--lr", type=float, default=1e-3, help="Adam learning rate")
    group.add_argument("--dropout", type=float, default=0.2,
                       help="hidden-layer dropout rate")
    group.add_argument("--hidden", type=int, default=128, help="hidden width")
    group.add_argument("--layers", type=int, default=2, help="hidden layer count")


def _feature_config(args) -> features.FeatureConfig:
    return features.FeatureConfig(
        backend=args.backend,
        dim=args.dim,
        ngram_min=args.ngram_min,
        ngram_max=args.ngram_max,
        normalize=features.NormalizeOptions(
            strip_diacritics=args.strip_diacritics,
            strip_tatweel=args.strip_tatweel,
            collapse_whitespace=args.collapse_whitespace,
        ),
    )


def _train_config(args, seed: int) -> model.TrainConfig:
    return model.TrainConfig(
        batch_size=args.batch_size,
        epochs=args.epochs,
        learning_rate=args.lr,
        dropout=args.dropout,
        seed=seed,
    )


def _load_features(args):
    """Load the corpus named by --in and turn it into (X, y) arrays."""
    examples = corpus.load_corpus(args.infile)
    if not examples:
        raise CorpusFormatError(f"empty corpus {args.infile!r}")
    config = _feature_config(args)
    table = None
    if config.backend == "embeddings":
        if not args.embeddings:
            raise UsageError("--backend embeddings requires --embeddings FILE")
        table = features.load_embedding_table(args.embeddings)
    X, y = features.featurize_corpus(examples, config, table)
    return examples, config, table, X, y


def _cmd_aggregate(args) -> int:
    records = corpus.load_vote_records(args.infile, quorum=args.quorum)
    examples = corpus.aggregate_corpus(records)
    corpus.save_corpus(examples, args.outfile)
    print(f"aggregated {len(examples)} examples -> {args.outfile}")
    return 0


def _cmd_stats(args) -> int:
    examples = corpus.load_corpus(args.infile)
    threshold = _parse_threshold(args.threshold)
    stats = corpus.corpus_stats(examples, threshold=threshold, quorum=args.quorum)
    print(f"examples: {stats.total}")
    print("categories:")
    for name in sorted(stats.per_category):
        print(f"  {name}: {stats.per_category[name]}")
    print("levels:")
    for k, count in enumerate(stats.level_histogram):
        print(f"  {k}/{stats.quorum}: {count}")
    print(f"sarcastic at threshold {threshold:.9f}: {stats.sarcastic_count}")
    return 0


def _cmd_train(args) -> int:
    _, config, _, X, y = _load_features(args)
    train_config = _train_config(args, args.seed)
    result = model.train(
        X, y, train_config, hidden_width=args.hidden, hidden_layers=args.layers
    )
    extra = {
        "features": {
            "backend": config.backend,
            "dim": config.dim,
            "ngram_min": config.ngram_min,
            "ngram_max": config.ngram_max,
            "strip_diacritics": config.normalize.strip_diacritics,
            "strip_tatweel": config.normalize.strip_tatweel,
            "collapse_whitespace": config.normalize.collapse_whitespace,
        },
        "train_config": {
            "batch_size": train_config.batch_size,
            "epochs": train_config.epochs,
            "learning_rate": train_config.learning_rate,
            "dropout": train_config.dropout,
            "seed": train_config.seed,
        },
    }
    model.save_model(result.params, args.outfile, dropout=args.dropout, extra=extra)
    if args.history_out:
        with atomic_writer(args.history_out) as handle:
            json.dump({"epoch_mse": result.history}, handle)
            handle.write("\n")
    print(f"trained {train_config.epochs} epochs, "
          f"final training MSE {result.history[-1]:.9f} -> {args.outfile}")
    return 0


def _cmd_cv(args) -> int:
    _, _, _, X, y = _load_features(args)
    threshold = _parse_threshold(args.threshold)
    report = evaluation.cross_validate(
        X, y,
        config=_train_config(args, args.seed),
        k=args.k,
        seed=args.seed,
        threshold=threshold,
        workers=args.workers,
    )
    sys.stdout.write(evaluation.render_report(report, "text"))
    if args.report_out:
        with atomic_writer(args.report_out) as handle:
            handle.write(evaluation.render_report(report, "json"))
    return 0


def _feature_config_from_model(metadata: dict, args) -> features.FeatureConfig:
    stored = metadata.get("features")
    if not stored:
        return _feature_config(args)
    return features.FeatureConfig(
        backend=stored.get("backend", "hashed"),
        dim=stored.get("dim", 4096),
        ngram_min=stored.get("ngram_min", 3),
        ngram_max=stored.get("ngram_max", 5),
        normalize=features.NormalizeOptions(
            strip_diacritics=stored.get("strip_diacritics", False),
            strip_tatweel=stored.get("strip_tatweel", False),
            collapse_whitespace=stored.get("collapse_whitespace", False),
        ),
    )


def _cmd_predict(args) -> int:
    params, metadata = model.load_model(args.model)
    config = _feature_config_from_model(metadata, args)

    inputs: list[str] = []
    if args.text is not None:
        inputs.append(args.text)
    if args.infile:
        with open(args.infile, encoding="utf-8") as handle:
            inputs.extend(line.rstrip("\n") for line in handle if line.strip())
    if not inputs:
        raise UsageError("predict needs --text or --in")

    table = None
    if config.backend == "embeddings":
        if not args.embeddings:
            raise UsageError("model uses the embeddings backend; pass --embeddings FILE")
        table = features.load_embedding_table(args.embeddings)

    for entry in inputs:
        if config.backend == "hashed":
            vector = features.hash_featurize(entry, config)
        else:
            if entry not in table.vectors:
                raise KeyError(f"no embedding for id {entry}")
            vector = table.vectors[entry]
        level = model.predict(params, vector)
        print(f"{level:.9f}")
    return 0


def _cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(derive_seed(args.seed, "gradcheck"))
    params = model.init_model(args.dim, args.hidden, args.layers,
                              seed=derive_seed(args.seed, "gradcheck-init"))
    x = rng.normal(size=(args.batch, args.dim))
    y = rng.uniform(size=args.batch)
    error = model.grad_check(params, x, y, h=args.h)
    print(f"max relative error: {error:.3e} (tolerance {args.tolerance:.3e})")
    if error >= args.tolerance:
        print("gradient check FAILED", file=sys.stderr)
        return 2
    return 0


def _cmd_serve(args) -> int:
    from . import server

    data_dir = args.data_dir or os.environ.get("SARQUANT_DATA_DIR")
    if not data_dir:
        raise UsageError("serve needs --data-dir or SARQUANT_DATA_DIR")
    server.serve(args.host, args.port, data_dir, quorum=args.quorum, ui_dir=args.ui_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="sarquant",
        description="Sarcasm quantification toolkit: aggregate annotator votes, "
                    "train and evaluate the sigmoid regressor, serve annotation.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    def command(name: str, help_text: str, func) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text,
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        p.set_defaults(func=func)
        return p

    p = command("aggregate", "votes file -> aggregated corpus", _cmd_aggregate)
    p.add_argument("--in", dest="infile", required=True, help="votes JSON Lines file")
    p.add_argument("--out", dest="outfile", required=True, help="aggregated corpus output")
    p.add_argument("--quorum", type=int, default=11, help="annotators per sentence")

    p = command("stats", "corpus summary counts", _cmd_stats)
    p.add_argument("--in", dest="infile", required=True, help="aggregated corpus file")
    p.add_argument("--threshold", default="6/11",
                   help="binary-sarcastic threshold (decimal or k/A)")
    p.add_argument("--quorum", type=int, default=11, help="annotators per sentence")

    p = command("train", "train the regressor on an aggregated corpus", _cmd_train)
    p.add_argument("--in", dest="infile", required=True, help="aggregated corpus file")
    p.add_argument("--out", dest="outfile", required=True, help="model JSON output")
    p.add_argument("--history-out", default=None, help="per-epoch loss JSON output")
    p.add_argument("--seed", type=int, default=0, help="master random seed")
    _add_feature_flags(p)
    _add_train_flags(p)

    p = command("cv", "k-fold cross-validation report", _cmd_cv)
    p.add_argument("--in", dest="infile", required=True, help="aggregated corpus file")
    p.add_argument("--k", type=int, default=10, help="number of folds")
    p.add_argument("--seed", type=int, default=0, help="master random seed")
    p.add_argument("--threshold", default="6/11",
                   help="binary accuracy threshold (decimal or k/A)")
    p.add_argument("--report-out", default=None, help="JSON report output file")
    p.add_argument("--workers", type=int, default=1, help="concurrent fold workers")
    _add_feature_flags(p)
    _add_train_flags(p)

    p = command("predict", "sarcasm level for sentences", _cmd_predict)
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--text", default=None, help="one sentence to score")
    p.add_argument("--in", dest="infile", default=None,
                   help="file of inputs, one per line (text, or ids for the "
                        "embeddings backend)")
    _add_feature_flags(p)

    p = command("gradcheck", "verify backprop against finite differences", _cmd_gradcheck)
    p.add_argument("--dim", type=int, default=6, help="input dimension")
    p.add_argument("--hidden", type=int, default=4, help="hidden width")
    p.add_argument("--layers", type=int, default=2, help="hidden layer count")
    p.add_argument("--batch", type=int, default=3, help="probe batch size")
    p.add_argument("--h", type=float, default=1e-5, help="finite-difference step")
    p.add_argument("--tolerance", type=float, default=1e-4, help="max relative error")
    p.add_argument("--seed", type=int, default=0, help="master random seed")

    p = command("serve", "run the annotation HTTP service", _cmd_serve)
    p.add_argument("--host", default="127.0.0.1", help="bind address")
    p.add_argument("--port", type=int, default=8080, help="listen port (0 = ephemeral)")
    p.add_argument("--data-dir", default=None,
                   help="event-log directory (default: $SARQUANT_DATA_DIR)")
    p.add_argument("--quorum", type=int, default=11, help="annotators per sentence")
    p.add_argument("--ui-dir", default=None, help="static annotation UI directory")

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (
        CorpusFormatError,
        EmbeddingFormatError,
        ModelFormatError,
        ServiceError,
        LogCorruptionError,
        TrainingDivergedError,
        KeyError,
        ValueError,
        OSError,
    ) as exc:
        message = exc.args[0] if exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
