"""Cross-validation folds, metrics, and report rendering."""

import json

import numpy as np
import pytest

from sarquant.evaluation import (
    CvReport,
    cross_validate,
    evaluate,
    kfold_indices,
    render_report,
    report_from_dict,
    report_to_dict,
)
from sarquant.model import TrainConfig, init_model, predict


class TestKfoldIndices:
    def test_published_corpus_size_split(self):
        plan = kfold_indices(1554, 10, seed=0)
        assert [len(f) for f in plan.folds] == [156] * 4 + [155] * 6

    def test_singleton_folds(self):
        plan = kfold_indices(10, 10, seed=1)
        assert [len(f) for f in plan.folds] == [1] * 10

    def test_uneven_split(self):
        plan = kfold_indices(23, 10, seed=2)
        assert [len(f) for f in plan.folds] == [3, 3, 3, 2, 2, 2, 2, 2, 2, 2]

    def test_partition_properties(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            k = int(rng.integers(2, 12))
            n = int(rng.integers(k, 400))
            plan = kfold_indices(n, k, seed=int(rng.integers(1 << 31)))
            flat = [i for fold in plan.folds for i in fold]
            assert sorted(flat) == list(range(n))
            sizes = [len(f) for f in plan.folds]
            assert max(sizes) - min(sizes) <= 1

    def test_depends_only_on_n_k_seed(self):
        a = kfold_indices(100, 7, seed=5)
        b = kfold_indices(100, 7, seed=5)
        assert a == b
        c = kfold_indices(100, 7, seed=6)
        assert a != c

    def test_n_below_k_rejected(self):
        with pytest.raises(ValueError):
            kfold_indices(5, 10, seed=0)


class TestEvaluate:
    def test_perfect_predictions(self):
        # constant 0.5 net against constant 0.5 targets
        params = init_model(3, 2, 2, seed=0)
        for layer in params.layers:
            layer.W[:] = 0.0
            layer.b[:] = 0.0
        X = np.ones((4, 3))
        y = np.full(4, 0.5)
        metrics = evaluate(params, X, y, threshold=0.4)
        assert metrics.mse == 0.0
        assert metrics.mae == 0.0
        assert metrics.accuracy == 1.0

    def test_hand_computed_case(self):
        from sarquant.evaluation import _metrics_from_preds

        metrics = _metrics_from_preds(
            np.array([0.9, 0.1]), np.array([1.0, 0.0]), threshold=0.5
        )
        assert metrics.mse == pytest.approx(0.01, abs=1e-15)
        assert metrics.mae == pytest.approx(0.1, abs=1e-15)
        assert metrics.accuracy == 1.0

    def test_matches_naive_loop_oracle(self):
        from sarquant.evaluation import _metrics_from_preds

        rng = np.random.default_rng(12)
        preds = rng.uniform(size=64)
        targets = rng.uniform(size=64)
        metrics = _metrics_from_preds(preds, targets, threshold=0.5)
        mse = sum((p - t) ** 2 for p, t in zip(preds, targets)) / 64
        mae = sum(abs(p - t) for p, t in zip(preds, targets)) / 64
        acc = sum((p >= 0.5) == (t >= 0.5) for p, t in zip(preds, targets)) / 64
        assert metrics.mse == pytest.approx(mse, abs=1e-12)
        assert metrics.mae == pytest.approx(mae, abs=1e-12)
        assert metrics.accuracy == pytest.approx(acc, abs=1e-12)

    def test_empty_dataset_rejected(self):
        params = init_model(3, 2, 2, seed=0)
        with pytest.raises(ValueError):
            evaluate(params, np.zeros((0, 3)), np.zeros(0))


def constant_trainer(value):
    def trainer(X_train, y_train, config):
        return lambda X_eval: np.full(X_eval.shape[0], value)

    return trainer


class TestCrossValidate:
    def test_constant_oracle_hook_gives_zero_loss(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(40, 5))
        y = np.full(40, 0.25)
        report = cross_validate(
            X, y, TrainConfig(epochs=1, seed=0), k=5, seed=3,
            trainer=constant_trainer(0.25),
        )
        assert report.fold_losses == [0.0] * 5
        assert report.final_loss == 0.0

    def test_final_loss_is_mean_of_folds(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(30, 4))
        y = rng.uniform(size=30)
        report = cross_validate(
            X, y, TrainConfig(epochs=1, seed=0), k=5, seed=1,
            trainer=constant_trainer(0.5),
        )
        assert report.final_loss == pytest.approx(np.mean(report.fold_losses), abs=1e-12)
        assert len(report.fold_losses) == 5

    def test_deterministic_end_to_end(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(30, 4))
        y = rng.uniform(size=30)
        config = TrainConfig(epochs=3, seed=0)
        a = cross_validate(X, y, config, k=3, seed=11)
        b = cross_validate(X, y, config, k=3, seed=11)
        assert a.fold_losses == b.fold_losses
        assert a.final_loss == b.final_loss

    def test_workers_do_not_change_results(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(30, 4))
        y = rng.uniform(size=30)
        config = TrainConfig(epochs=2, seed=0)
        serial = cross_validate(X, y, config, k=3, seed=2)
        threaded = cross_validate(X, y, config, k=3, seed=2, workers=3)
        assert serial.fold_losses == threaded.fold_losses

    def test_training_error_annotated_with_fold(self):
        def broken(X_train, y_train, config):
            raise RuntimeError("boom")

        rng = np.random.default_rng(8)
        X = rng.normal(size=(20, 3))
        y = rng.uniform(size=20)
        with pytest.raises(RuntimeError, match="fold 1"):
            cross_validate(X, y, TrainConfig(epochs=1, seed=0), k=4, seed=0, trainer=broken)


class TestRenderReport:
    def _report(self):
        losses = [0.01 * (i + 1) for i in range(10)]
        return CvReport(
            k=10,
            seed=7,
            fold_losses=losses,
            final_loss=float(np.mean(losses)),
            metrics=[{"mse": l, "mae": 0.1, "accuracy": 0.9} for l in losses],
            config={"batch_size": 8},
        )

    def test_text_has_fold_rows_and_final(self):
        text = render_report(self._report(), "text")
        lines = text.strip().splitlines()
        assert len(lines) == 12  # header + 10 folds + final
        assert lines[0].startswith("Fold Number")
        assert lines[1].startswith("Fold 1")
        assert lines[-1].startswith("Final loss")

    def test_losses_printed_with_nine_decimals(self):
        text = render_report(self._report(), "text")
        for line in text.strip().splitlines()[1:]:
            value = line.split("|")[1].strip()
            whole, frac = value.split(".")
            assert len(frac) == 9

    def test_json_round_trip_byte_identical(self):
        report = self._report()
        rendered = render_report(report, "json")
        parsed = report_from_dict(json.loads(rendered))
        assert render_report(parsed, "json") == rendered

    def test_dict_round_trip(self):
        report = self._report()
        assert report_from_dict(report_to_dict(report)) == report

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            render_report(self._report(), "yaml")
