"""K-fold cross-validation and metric reporting.

Folds come from an unstratified seeded shuffle; each fold trains a fresh
model (init seed derived from the run seed and the fold index) on the
other K-1 folds and is scored on its own examples in infer mode.  The
final loss is the unweighted mean of the per-fold MSE values.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import model as model_mod
from ._util import derive_seed
from .corpus import DEFAULT_THRESHOLD, binarize
from .model import TrainConfig

AVERAGING_RULE = "unweighted_mean_of_fold_losses"


@dataclass(frozen=True)
class FoldPlan:
    """K disjoint validation index sets covering 0..N-1."""

    folds: tuple[tuple[int, ...], ...]
    seed: int

    @property
    def k(self) -> int:
        return len(self.folds)


@dataclass
class EvalMetrics:
    mse: float
    mae: float
    accuracy: float

    def as_dict(self) -> dict[str, float]:
        return {"mse": self.mse, "mae": self.mae, "accuracy": self.accuracy}


@dataclass
class CvReport:
    k: int
    seed: int
    fold_losses: list[float]
    final_loss: float
    metrics: list[dict[str, float]] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    threshold: float = DEFAULT_THRESHOLD
    averaging: str = AVERAGING_RULE


def kfold_indices(n: int, k: int, seed: int) -> FoldPlan:
    """Shuffle 0..N-1 with a seeded generator and split into K folds.

    The first N mod K folds get the extra element, so sizes differ by at
    most one.  Fold contents depend only on (N, K, seed).
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise ValueError(f"cannot split {n} examples into {k} folds")
    order = np.random.default_rng(seed).permutation(n)
    base, extra = divmod(n, k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(tuple(int(j) for j in order[start : start + size]))
        start += size
    return FoldPlan(folds=tuple(folds), seed=seed)


def evaluate(
    params: model_mod.RegressorParams,
    X: np.ndarray,
    y: np.ndarray,
    threshold: float = DEFAULT_THRESHOLD,
) -> EvalMetrics:
    """MSE, MAE, and binarized-at-threshold accuracy on a dataset."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    preds = np.atleast_1d(model_mod.predict(params, X))
    return _metrics_from_preds(preds, y, threshold)


def _metrics_from_preds(preds: np.ndarray, y: np.ndarray, threshold: float) -> EvalMetrics:
    diff = preds - y
    mse = float(np.dot(diff, diff) / diff.size)
    mae = float(np.abs(diff).mean())
    # The binary view clamps into [0, 1] first: noisy targets may stray
    # slightly outside the unit interval without invalidating MSE/MAE.
    pred_bin = np.array([binarize(min(max(p, 0.0), 1.0), threshold) for p in preds])
    true_bin = np.array([binarize(min(max(v, 0.0), 1.0), threshold) for v in y])
    accuracy = float((pred_bin == true_bin).mean())
    return EvalMetrics(mse=mse, mae=mae, accuracy=accuracy)


TrainerFn = Callable[[np.ndarray, np.ndarray, TrainConfig], Callable[[np.ndarray], np.ndarray]]


def _default_trainer(X: np.ndarray, y: np.ndarray, config: TrainConfig):
    result = model_mod.train(X, y, config)
    return lambda X_eval: np.atleast_1d(model_mod.predict(result.params, X_eval))


def cross_validate(
    X: np.ndarray,
    y: np.ndarray,
    config: TrainConfig = TrainConfig(),
    k: int = 10,
    seed: int = 0,
    threshold: float = DEFAULT_THRESHOLD,
    trainer: TrainerFn | None = None,
    workers: int = 1,
) -> CvReport:
    """Train/evaluate across K folds and assemble a report.

    ``trainer`` may replace the model-training path (it gets the fold's
    training arrays and config and must return a predict function); the
    default trains the regressor.  Folds are independent, so ``workers``
    > 1 runs them concurrently; results are always assembled in fold
    order.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    plan = kfold_indices(X.shape[0], k, seed)
    train_fn = trainer if trainer is not None else _default_trainer

    def run_fold(i: int) -> EvalMetrics:
        val_idx = np.array(plan.folds[i], dtype=np.intp)
        mask = np.ones(X.shape[0], dtype=bool)
        mask[val_idx] = False
        fold_config = _with_seed(config, derive_seed(seed, f"fold-{i}"))
        try:
            predict_fn = train_fn(X[mask], y[mask], fold_config)
            preds = np.asarray(predict_fn(X[val_idx]), dtype=np.float64).ravel()
        except Exception as exc:
            raise RuntimeError(f"fold {i + 1}: {exc}") from exc
        return _metrics_from_preds(preds, y[val_idx], threshold)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fold_metrics = list(pool.map(run_fold, range(k)))
    else:
        fold_metrics = [run_fold(i) for i in range(k)]

    fold_losses = [m.mse for m in fold_metrics]
    return CvReport(
        k=k,
        seed=seed,
        fold_losses=fold_losses,
        final_loss=float(np.mean(fold_losses)),
        metrics=[m.as_dict() for m in fold_metrics],
        config=_config_echo(config),
        threshold=threshold,
    )


def _with_seed(config: TrainConfig, seed: int) -> TrainConfig:
    return TrainConfig(
        batch_size=config.batch_size,
        epochs=config.epochs,
        learning_rate=config.learning_rate,
        dropout=config.dropout,
        beta1=config.beta1,
        beta2=config.beta2,
        epsilon=config.epsilon,
        seed=seed,
    )


def _config_echo(config: TrainConfig) -> dict:
    return {
        "batch_size": config.batch_size,
        "epochs": config.epochs,
        "learning_rate": config.learning_rate,
        "dropout": config.dropout,
        "beta1": config.beta1,
        "beta2": config.beta2,
        "epsilon": config.epsilon,
        "seed": config.seed,
    }


def report_to_dict(report: CvReport) -> dict:
    return {
        "k": report.k,
        "seed": report.seed,
        "fold_losses": report.fold_losses,
        "final_loss": report.final_loss,
        "metrics": report.metrics,
        "config": report.config,
        "threshold": report.threshold,
        "averaging": report.averaging,
    }


def report_from_dict(doc: dict) -> CvReport:
    return CvReport(
        k=doc["k"],
        seed=doc["seed"],
        fold_losses=list(doc["fold_losses"]),
        final_loss=doc["final_loss"],
        metrics=list(doc.get("metrics", [])),
        config=dict(doc.get("config", {})),
        threshold=doc.get("threshold", DEFAULT_THRESHOLD),
        averaging=doc.get("averaging", AVERAGING_RULE),
    )


def render_report(report: CvReport, format: str = "text") -> str:
    """Render a CvReport as an aligned text table or canonical JSON.

    The JSON form is byte-stable: rendering a parsed report reproduces
    the exact document.
    """
    if format == "json":
        return json.dumps(report_to_dict(report), sort_keys=True, indent=2) + "\n"
    if format != "text":
        raise ValueError(f"unknown report format {format!r}")

    rows = [(f"Fold {i + 1}", f"{loss:.9f}") for i, loss in enumerate(report.fold_losses)]
    rows.append(("Final loss", f"{report.final_loss:.9f}"))
    left_width = max(len("Fold Number"), max(len(r[0]) for r in rows))
    lines = [f"{'Fold Number':<{left_width}} | Evaluation loss"]
    for name, value in rows:
        lines.append(f"{name:<{left_width}} | {value}")
    return "\n".join(lines) + "\n"
