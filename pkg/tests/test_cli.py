import json
from pathlib import Path

import numpy as np
import pytest

from vultureboost.cli import main

from conftest import make_blobs, write_table


def _tree(path: Path) -> dict:
    return {p.relative_to(path).as_posix(): p.read_bytes()
            for p in sorted(path.rglob("*")) if p.is_file()}


@pytest.fixture
def table(tmp_path):
    matrix, labels = make_blobs(n=160, d=6, sep=3.0, seed=1)
    return write_table(tmp_path / "table.csv", matrix.values, labels.decode())


class TestPreprocess:
    def test_writes_three_artifacts(self, table, tmp_path):
        out = tmp_path / "pre"
        assert main(["preprocess", "--input", str(table), "--out", str(out)]) == 0
        assert (out / "normalized.csv").exists()
        assert (out / "label_map.json").exists()
        assert (out / "normalizer.json").exists()
        label_map = json.loads((out / "label_map.json").read_text())
        assert set(label_map.values()) == {"neg", "pos"}

    def test_normalized_values_in_unit_interval(self, table, tmp_path):
        out = tmp_path / "pre"
        main(["preprocess", "--input", str(table), "--out", str(out)])
        lines = (out / "normalized.csv").read_text().splitlines()
        for line in lines[1:]:
            cells = line.split(",")
            values = [float(c) for c in cells[:-1]]
            assert min(values) >= 0.0 and max(values) <= 1.0

    def test_missing_label_column_exit_2(self, table, tmp_path):
        code = main(["preprocess", "--input", str(table), "--label-column", "nope",
                     "--out", str(tmp_path / "x")])
        assert code == 2

    def test_missing_file_exit_2(self, tmp_path):
        code = main(["preprocess", "--input", str(tmp_path / "absent.csv"),
                     "--out", str(tmp_path / "x")])
        assert code == 2

    def test_rerun_byte_identical(self, table, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["preprocess", "--input", str(table), "--out", str(a), "--seed", "3"])
        main(["preprocess", "--input", str(table), "--out", str(b), "--seed", "3"])
        assert _tree(a) == _tree(b)


class TestCv:
    def test_report_schema_and_determinism(self, table, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["cv", "--input", str(table), "--k", "4", "--seed", "5",
                "--variance-ratio", "0.97",
                "--config", str(_config(tmp_path, {"classifier.n_estimators": 5}))]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert _tree(a) == _tree(b)

        report = json.loads((a / "cv_report.json").read_text())
        for name in ("accuracy", "precision", "recall", "specificity", "kappa", "f1"):
            assert name in report["mean"]
        assert len(report["folds"]) == 4
        assert (a / "roc_fold1.csv").exists()
        assert (a / "fold_plan.json").exists()

    def test_fold_failure_exit_3(self, table, tmp_path):
        cfg = _config(tmp_path, {"classifier.n_estimators": 0})
        code = main(["cv", "--input", str(table), "--out", str(tmp_path / "x"),
                     "--config", str(cfg)])
        assert code == 3

    def test_gbdt_classifier(self, table, tmp_path):
        cfg = _config(tmp_path, {"classifier.n_rounds": 5})
        out = tmp_path / "g"
        assert main(["cv", "--input", str(table), "--classifier", "gbdt",
                     "--k", "3", "--out", str(out), "--config", str(cfg)]) == 0
        report = json.loads((out / "cv_report.json").read_text())
        assert report["mean"]["accuracy"] >= 0.9

    def test_tune_once_writes_best_params(self, table, tmp_path):
        out = tmp_path / "t1"
        assert main(["cv", "--input", str(table), "--tune", "--population", "4",
                     "--iterations", "2", "--k", "3", "--seed", "2",
                     "--out", str(out)]) == 0
        assert (out / "best_params.json").exists()
        report = json.loads((out / "cv_report.json").read_text())
        assert report["mean"]["accuracy"] >= 0.9

    def test_tune_per_fold_mode(self, table, tmp_path):
        out = tmp_path / "t2"
        assert main(["cv", "--input", str(table), "--tune",
                     "--tune-mode", "per-fold", "--population", "3",
                     "--iterations", "2", "--k", "3", "--seed", "2",
                     "--out", str(out)]) == 0
        report = json.loads((out / "cv_report.json").read_text())
        assert report["mean"]["accuracy"] >= 0.9
        assert not (out / "best_params.json").exists()  # no single optimum


class TestTune:
    def test_outputs_and_determinism(self, table, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["tune", "--input", str(table), "--population", "4",
                "--iterations", "2", "--seed", "9"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert _tree(a) == _tree(b)

        conv = (a / "convergence.csv").read_text().splitlines()
        assert conv[0].startswith("# population=4,iterations=2")
        assert conv[1] == "iteration,best_accuracy"
        assert len(conv) == 2 + 2
        trials = [json.loads(line) for line in
                  (a / "trials.jsonl").read_text().splitlines()]
        assert len(trials) == 4 * (2 + 1)
        best = json.loads((a / "best_params.json").read_text())
        assert 1e-7 <= best["learning_rate"] <= 0.9
        assert 3 <= best["n_estimators"] <= 20

    def test_bad_budget_exit_4(self, table, tmp_path):
        cfg = _config(tmp_path, {"tuner.budget": 1})
        code = main(["tune", "--input", str(table), "--population", "4",
                     "--iterations", "2", "--out", str(tmp_path / "x"),
                     "--config", str(cfg)])
        assert code == 4


class TestTrainEvaluate:
    def test_round_trip_and_metrics_schema(self, table, tmp_path):
        train_out = tmp_path / "tr"
        cfg = _config(tmp_path, {"classifier.n_estimators": 5})
        assert main(["train", "--input", str(table), "--out", str(train_out),
                     "--config", str(cfg)]) == 0
        model = train_out / "model.json"
        assert model.exists()

        ev = tmp_path / "ev"
        assert main(["evaluate", "--model", str(model), "--input", str(table),
                     "--out", str(ev)]) == 0
        doc = json.loads((ev / "metrics.json").read_text())
        assert {"accuracy", "precision", "recall", "specificity", "kappa",
                "f1", "auc"} <= set(doc["metrics"])
        assert (ev / "roc.csv").exists()

    def test_train_accuracy_at_least_cv_mean(self, table, tmp_path):
        cfg = _config(tmp_path, {"classifier.n_estimators": 5})
        cv_out = tmp_path / "cv"
        main(["cv", "--input", str(table), "--k", "4", "--out", str(cv_out),
              "--config", str(cfg)])
        cv_mean = json.loads((cv_out / "cv_report.json").read_text())["mean"]["accuracy"]

        train_out = tmp_path / "tr"
        main(["train", "--input", str(table), "--out", str(train_out),
              "--config", str(cfg)])
        ev = tmp_path / "ev"
        main(["evaluate", "--model", str(train_out / "model.json"),
              "--input", str(table), "--out", str(ev)])
        train_acc = json.loads((ev / "metrics.json").read_text())["metrics"]["accuracy"]
        assert train_acc >= cv_mean - 1e-9

    def test_wrong_width_exit_5(self, table, tmp_path):
        train_out = tmp_path / "tr"
        cfg = _config(tmp_path, {"classifier.n_estimators": 3})
        main(["train", "--input", str(table), "--out", str(train_out),
              "--config", str(cfg)])

        matrix, labels = make_blobs(n=40, d=3, seed=2)
        narrow = write_table(tmp_path / "narrow.csv", matrix.values, labels.decode())
        code = main(["evaluate", "--model", str(train_out / "model.json"),
                     "--input", str(narrow), "--out", str(tmp_path / "x")])
        assert code == 5

    def test_params_file_used(self, table, tmp_path):
        params = tmp_path / "params.json"
        params.write_text(json.dumps({"learning_rate": 0.3, "n_estimators": 4}))
        out = tmp_path / "tr"
        assert main(["train", "--input", str(table), "--params", str(params),
                     "--out", str(out)]) == 0
        doc = json.loads((out / "model.json").read_text())
        spec = doc["pipeline"]["spec"]["classifier_params"]
        assert spec["learning_rate"] == 0.3
        assert spec["n_estimators"] == 4


class TestConfigHandling:
    def test_flag_overrides_config(self, table, tmp_path):
        cfg = _config(tmp_path, {"cv.k": 3, "classifier.n_estimators": 4})
        out = tmp_path / "o"
        main(["cv", "--input", str(table), "--k", "5", "--out", str(out),
              "--config", str(cfg)])
        report = json.loads((out / "cv_report.json").read_text())
        assert report["k"] == 5

    def test_config_supplies_input(self, table, tmp_path):
        cfg = _config(tmp_path, {"dataset.input": str(table),
                                 "classifier.n_estimators": 4})
        out = tmp_path / "o"
        assert main(["cv", "--k", "3", "--out", str(out), "--config", str(cfg)]) == 0

    def test_env_var_output_root(self, table, tmp_path, monkeypatch):
        root = tmp_path / "envroot"
        monkeypatch.setenv("VULTUREBOOST_OUT", str(root))
        assert main(["preprocess", "--input", str(table)]) == 0
        assert (root / "normalized.csv").exists()

    def test_positive_class_by_name(self, table, tmp_path):
        cfg = _config(tmp_path, {"metrics.positive_class": "neg",
                                 "classifier.n_estimators": 4})
        out = tmp_path / "o"
        assert main(["cv", "--input", str(table), "--k", "3", "--out", str(out),
                     "--config", str(cfg)]) == 0

    def test_unknown_positive_class_exit_2(self, table, tmp_path):
        cfg = _config(tmp_path, {"metrics.positive_class": "zebra"})
        code = main(["cv", "--input", str(table), "--out", str(tmp_path / "x"),
                     "--config", str(cfg)])
        assert code == 2


def _config(tmp_path, extra):
    path = tmp_path / f"cfg{abs(hash(json.dumps(extra, sort_keys=True))) % 10_000}.json"
    path.write_text(json.dumps(extra))
    return path
