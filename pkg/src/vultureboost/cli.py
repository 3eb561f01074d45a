"""Command-line pipeline: preprocess, cv, tune, train, evaluate.

Every command is a pure function of (inputs, config, seed): reruns produce
byte-identical outputs. Config files are flat JSON documents with dotted
keys (see docs/formats.md); command-line flags override file values.

Exit codes: 0 success, 2 input schema, 3 CV failure, 4 tuner failure,
5 model/data mismatch.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import dataset, tuner
from .avoa import AvoaParams
from .dataset import SchemaError, apply_minmax, fit_minmax, load_feature_table, \
    make_stratified_folds
from .metrics import FittedPipeline, FoldFitError, ModelDataMismatch, PipelineSpec, \
    cross_validate, evaluate_pipeline, fit_pipeline
from .tuner import TunerConfig, best_accuracy_series, gbdt_space, ngboost_space, tune

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_CV = 3
EXIT_TUNER = 4
EXIT_MISMATCH = 5

OUT_ENV_VAR = "VULTUREBOOST_OUT"


class TunerError(RuntimeError):
    pass


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("config file must hold a JSON object")
    return doc


def _settings(args) -> dict:
    """Defaults, overlaid by the config file, overlaid by CLI flags."""
    cfg = {
        "dataset.label_column": "label",
        "pca.variance_ratio": 0.97,
        "classifier.kind": "ngboost",
        "cv.k": 5,
        "cv.tune": False,
        "cv.tune_mode": "once",
        "tuner.population": 50,
        "tuner.iterations": 40,
        "tuner.inner_folds": 3,
        "seed": 0,
    }
    cfg.update(_load_config(getattr(args, "config", None)))
    overrides = {
        "dataset.input": getattr(args, "input", None),
        "dataset.label_column": getattr(args, "label_column", None),
        "pca.variance_ratio": getattr(args, "variance_ratio", None),
        "classifier.kind": getattr(args, "classifier", None),
        "cv.k": getattr(args, "k", None),
        "cv.tune": True if getattr(args, "tune", False) else None,
        "cv.tune_mode": getattr(args, "tune_mode", None),
        "tuner.population": getattr(args, "population", None),
        "tuner.iterations": getattr(args, "iterations", None),
        "tuner.inner_folds": getattr(args, "inner_folds", None),
        "seed": getattr(args, "seed", None),
        "out": getattr(args, "out", None),
    }
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return cfg


def _out_dir(cfg) -> Path:
    root = cfg.get("out") or os.environ.get(OUT_ENV_VAR) or "."
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _load_table(cfg):
    input_path = cfg.get("dataset.input")
    if not input_path:
        raise SchemaError("no input table given (flag --input or key dataset.input)")
    class_map = cfg.get("dataset.class_map")
    return load_feature_table(input_path, cfg["dataset.label_column"], class_map)


def _positive_label(cfg, labels) -> int:
    name = cfg.get("metrics.positive_class")
    if name is None:
        return 1
    for idx, cls in labels.class_names.items():
        if cls == str(name):
            return idx
    raise SchemaError(f"positive class {name!r} not present in the label column")


def _classifier_params(cfg) -> dict:
    prefix = "classifier."
    skip = {"classifier.kind"}
    return {k[len(prefix):]: v for k, v in cfg.items()
            if k.startswith(prefix) and k not in skip}


def _pipeline_spec(cfg, labels, params=None) -> PipelineSpec:
    return PipelineSpec(
        classifier=cfg["classifier.kind"],
        classifier_params=_classifier_params(cfg) if params is None else params,
        variance_ratio=cfg["pca.variance_ratio"],
        positive_label=_positive_label(cfg, labels),
        seed=int(cfg["seed"]),
    )


def _tuner_config(cfg, labels) -> TunerConfig:
    return TunerConfig(
        avoa=AvoaParams(population_size=int(cfg["tuner.population"]),
                        max_iterations=int(cfg["tuner.iterations"]),
                        seed=int(cfg["seed"])),
        inner_folds=int(cfg["tuner.inner_folds"]),
        seed=int(cfg["seed"]),
        budget=cfg.get("tuner.budget"),
        variance_ratio=cfg["pca.variance_ratio"],
        positive_label=_positive_label(cfg, labels),
        fixed_params=_classifier_params(cfg),
    )


def _space_for(kind: str):
    return ngboost_space() if kind == "ngboost" else gbdt_space()


def _fmt_cell(value: float) -> str:
    return repr(float(value))


def cmd_preprocess(args) -> int:
    cfg = _settings(args)
    out = _out_dir(cfg)
    matrix, labels = _load_table(cfg)
    normalizer = fit_minmax(matrix)
    normalized = apply_minmax(matrix, normalizer)

    label_col = cfg["dataset.label_column"]
    decoded = labels.decode()
    with open(out / "normalized.csv", "w", encoding="utf-8") as fh:
        fh.write(",".join(list(matrix.feature_names) + [label_col]) + "\n")
        for row, cls in zip(normalized.values, decoded):
            fh.write(",".join(_fmt_cell(v) for v in row) + f",{cls}\n")
    _write_json(out / "label_map.json",
                {str(k): v for k, v in labels.class_names.items()})
    _write_json(out / "normalizer.json", normalizer.to_json_dict())
    return EXIT_OK


def _tuned_params(cfg, features, labels):
    kind = cfg["classifier.kind"]
    config = _tuner_config(cfg, labels)
    best, trials, trace = tune(_space_for(kind), kind, features, labels, config)
    return tuner._classifier_params(kind, best, config.fixed_params), best, trials, trace


def cmd_cv(args) -> int:
    cfg = _settings(args)
    out = _out_dir(cfg)
    matrix, labels = _load_table(cfg)
    plan = make_stratified_folds(labels, int(cfg["cv.k"]), int(cfg["seed"]))

    spec_factory = None
    if cfg["cv.tune"] and cfg["cv.tune_mode"] == "once":
        params, best, _, _ = _tuned_params(cfg, matrix, labels)
        _write_json(out / "best_params.json", best)
        spec = _pipeline_spec(cfg, labels, params=params)
    elif cfg["cv.tune"]:
        spec = _pipeline_spec(cfg, labels)

        def spec_factory(fold, train_features, train_labels):
            kind = cfg["classifier.kind"]
            config = _tuner_config(cfg, train_labels)
            best, _, _ = tune(_space_for(kind), kind, train_features,
                              train_labels, config)
            params = tuner._classifier_params(kind, best, config.fixed_params)
            return _pipeline_spec(cfg, train_labels, params=params)
    else:
        spec = _pipeline_spec(cfg, labels)

    report = cross_validate(matrix, labels, spec, plan, spec_factory=spec_factory)
    _write_json(out / "cv_report.json", report.to_json_dict())
    plan.save(out / "fold_plan.json")
    for record in report.folds:
        record.roc.to_csv(out / f"roc_fold{record.fold}.csv")
    return EXIT_OK


def cmd_tune(args) -> int:
    cfg = _settings(args)
    out = _out_dir(cfg)
    matrix, labels = _load_table(cfg)
    kind = cfg["classifier.kind"]
    config = _tuner_config(cfg, labels)
    try:
        best, trials, trace = tune(_space_for(kind), kind, matrix, labels, config)
    except SchemaError:
        raise
    except Exception as exc:
        raise TunerError(str(exc)) from exc

    _write_json(out / "best_params.json", best)
    with open(out / "trials.jsonl", "w", encoding="utf-8") as fh:
        for trial in trials:
            fh.write(json.dumps(trial.to_json_dict(), sort_keys=True) + "\n")
    header = (f"population={config.avoa.population_size},"
              f"iterations={config.avoa.max_iterations},"
              f"p1={config.avoa.p1},p2={config.avoa.p2},p3={config.avoa.p3},"
              f"seed={config.avoa.seed}")
    trace.to_csv(out / "convergence.csv", value_name="best_accuracy",
                 values=best_accuracy_series(trace), header_comment=header)
    return EXIT_OK


def _bundle(fitted: FittedPipeline, labels) -> dict:
    return {
        "pipeline": fitted.to_json_dict(),
        "label_map": {str(k): v for k, v in labels.class_names.items()},
    }


def cmd_train(args) -> int:
    cfg = _settings(args)
    out = _out_dir(cfg)
    matrix, labels = _load_table(cfg)
    params = None
    if getattr(args, "params", None):
        with open(args.params, "r", encoding="utf-8") as fh:
            decoded = json.load(fh)
        params = tuner._classifier_params(cfg["classifier.kind"], decoded,
                                          _classifier_params(cfg))
    spec = _pipeline_spec(cfg, labels, params=params)
    fitted = fit_pipeline(matrix, labels, spec)
    _write_json(out / "model.json", _bundle(fitted, labels))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _settings(args)
    out = _out_dir(cfg)
    model_path = getattr(args, "model", None)
    if not model_path:
        raise SchemaError("evaluate requires --model")
    try:
        with open(model_path, "r", encoding="utf-8") as fh:
            bundle = json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"model file not found: {model_path}") from None
    fitted = FittedPipeline.from_json_dict(bundle["pipeline"])
    class_map = {name: int(idx) for idx, name in bundle["label_map"].items()}
    input_path = cfg.get("dataset.input")
    if not input_path:
        raise SchemaError("no input table given (flag --input or key dataset.input)")
    matrix, labels = load_feature_table(input_path, cfg["dataset.label_column"],
                                        class_map=class_map)
    cm, record, roc = evaluate_pipeline(fitted, matrix, labels)
    _write_json(out / "metrics.json", {"confusion": cm.to_dict(), "metrics": record})
    roc.to_csv(out / "roc.csv")
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat JSON config file")
    parser.add_argument("--seed", type=int, help="global random seed")
    parser.add_argument("--out", help=f"output directory (default ${OUT_ENV_VAR} or .)")
    parser.add_argument("--input", help="feature table CSV")
    parser.add_argument("--label-column", dest="label_column", help="label column name")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vultureboost",
        description="Feature-table classification pipeline with vulture-search tuning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="normalize a table and save the artifacts")
    _add_common(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("cv", help="stratified k-fold cross-validation report")
    _add_common(p)
    p.add_argument("--variance-ratio", dest="variance_ratio", type=float,
                   help="explained-variance target selecting the component count")
    p.add_argument("--classifier", choices=["ngboost", "gbdt"])
    p.add_argument("--k", type=int, help="fold count")
    p.add_argument("--tune", action="store_true", help="tune hyperparameters first")
    p.add_argument("--tune-mode", dest="tune_mode", choices=["once", "per-fold"])
    p.add_argument("--population", type=int, help="tuner population size")
    p.add_argument("--iterations", type=int, help="tuner iteration count")
    p.add_argument("--inner-folds", dest="inner_folds", type=int)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("tune", help="hyperparameter search on the full table")
    _add_common(p)
    p.add_argument("--variance-ratio", dest="variance_ratio", type=float)
    p.add_argument("--classifier", choices=["ngboost", "gbdt"])
    p.add_argument("--population", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--inner-folds", dest="inner_folds", type=int)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("train", help="fit the pipeline on the whole table")
    _add_common(p)
    p.add_argument("--variance-ratio", dest="variance_ratio", type=float)
    p.add_argument("--classifier", choices=["ngboost", "gbdt"])
    p.add_argument("--params", help="JSON params file from the tune command")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a saved model on a table")
    _add_common(p)
    p.add_argument("--model", help="model.json written by train")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except FoldFitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CV
    except TunerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TUNER
    except ModelDataMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
