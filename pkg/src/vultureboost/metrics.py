"""Confusion counts, the scalar metric suite, ROC/AUC, and the k-fold driver."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gbdt, ngb, pca
from .dataset import FeatureMatrix, FoldPlan, LabelVector, apply_minmax, fit_minmax

METRIC_NAMES = ("accuracy", "precision", "recall", "specificity", "kappa", "f1")


class FoldFitError(RuntimeError):
    """A cross-validation fold failed to fit; carries the fold index."""

    def __init__(self, fold: int, message: str):
        super().__init__(f"fold {fold}: {message}")
        self.fold = fold


class ModelDataMismatch(ValueError):
    """A fitted pipeline was applied to a table of the wrong width."""


@dataclass(frozen=True)
class ConfusionMatrix:
    """TP/TN/FP/FN counts, class 1 treated as positive."""

    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.tn + other.tn,
                               self.fp + other.fp, self.fn + other.fn)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}


def _as_label_array(labels) -> np.ndarray:
    if isinstance(labels, LabelVector):
        return labels.labels
    return np.asarray(labels, dtype=int)


def confusion(pred, truth, positive_label: int = 1) -> ConfusionMatrix:
    """Count agreement of predicted vs true labels."""
    p = _as_label_array(pred)
    t = _as_label_array(truth)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.size} predictions vs {t.size} truths")
    pos_p, pos_t = p == positive_label, t == positive_label
    return ConfusionMatrix(
        tp=int(np.sum(pos_p & pos_t)),
        tn=int(np.sum(~pos_p & ~pos_t)),
        fp=int(np.sum(pos_p & ~pos_t)),
        fn=int(np.sum(~pos_p & pos_t)),
    )


def scalar_metrics(cm: ConfusionMatrix) -> dict:
    """Accuracy, precision, recall, specificity, f1, and Cohen's kappa.

    Metrics whose denominator is zero come back as None (undefined),
    never as a silent 0.
    """
    tp, tn, fp, fn = cm.tp, cm.tn, cm.fp, cm.fn
    total = cm.total

    def ratio(num, den):
        return num / den if den > 0 else None

    accuracy = ratio(tp + tn, total)
    precision = ratio(tp, tp + fp)
    recall = ratio(tp, tp + fn)
    specificity = ratio(tn, tn + fp)
    f1 = ratio(tp, tp + 0.5 * (fp + fn))

    kappa = None
    if total > 0:
        po = (tp + tn) / total
        pe = ((tp + fp) * (tp + fn) + (tn + fp) * (tn + fn)) / total ** 2
        if pe != 1.0:
            kappa = (po - pe) / (1.0 - pe)
    return {"accuracy": accuracy, "precision": precision, "recall": recall,
            "specificity": specificity, "kappa": kappa, "f1": f1}


@dataclass(frozen=True)
class RocCurve:
    """Threshold-sweep operating points and the area under them."""

    points: tuple
    auc: float

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("fpr,tpr\n")
            for fpr, tpr in self.points:
                fh.write(f"{fpr!r},{tpr!r}\n")


def roc_auc(scores, truth, positive_label: int = 1) -> RocCurve:
    """ROC by descending-score threshold sweep, equal scores in one step.

    The area is accumulated as the integer 2*wins + ties over positive/
    negative pairs, then divided by 2*P*N, which makes it exactly equal to
    pair counting with half credit for ties.
    """
    s = np.asarray(scores, dtype=float)
    t = _as_label_array(truth) == positive_label
    if s.shape != t.shape:
        raise ValueError("scores and truth lengths differ")
    n_pos = int(t.sum())
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs at least one sample of each class")

    order = np.argsort(-s, kind="stable")
    s_sorted, t_sorted = s[order], t[order]

    points = [(0.0, 0.0)]
    tp = fp = 0
    numerator = 0  # exact int: 2*wins + ties
    i = 0
    n = s.size
    while i < n:
        j = i
        while j < n and s_sorted[j] == s_sorted[i]:
            j += 1
        d_tp = int(t_sorted[i:j].sum())
        d_fp = (j - i) - d_tp
        numerator += d_fp * (2 * tp + d_tp)
        tp += d_tp
        fp += d_fp
        points.append((fp / n_neg, tp / n_pos))
        i = j
    return RocCurve(tuple(points), numerator / (2 * n_pos * n_neg))


def aggregate(per_fold: list[dict]) -> tuple[dict, dict]:
    """Mean and standard deviation per metric across folds.

    Uses the population convention (divisor n), which reproduces the
    reference fold-table arithmetic; undefined fold values are skipped.
    """
    names = set()
    for rec in per_fold:
        names.update(rec)
    mean, sd = {}, {}
    for name in sorted(names):
        vals = [rec[name] for rec in per_fold if rec.get(name) is not None]
        if not vals:
            mean[name] = None
            sd[name] = None
            continue
        v = np.asarray(vals, dtype=float)
        mean[name] = float(v.mean())
        sd[name] = float(v.std(ddof=0))
    return mean, sd


@dataclass(frozen=True)
class PipelineSpec:
    """What to fit inside each training partition."""

    classifier: str = "ngboost"
    classifier_params: dict = field(default_factory=dict)
    variance_ratio: float | None = 0.97
    positive_label: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.classifier not in ("ngboost", "gbdt"):
            raise ValueError(f"unknown classifier: {self.classifier!r}")
        if self.variance_ratio is not None and not 0.0 < self.variance_ratio <= 1.0:
            raise ValueError("variance_ratio must lie in (0, 1]")


@dataclass(frozen=True)
class FittedPipeline:
    """Normalizer + optional projection + classifier, fitted together."""

    spec: PipelineSpec
    normalizer: object
    pca_model: pca.PcaModel | None
    n_components: int | None
    model: object
    feature_names: tuple[str, ...]

    def _project(self, features: FeatureMatrix) -> FeatureMatrix:
        if features.n_features != len(self.feature_names):
            raise ModelDataMismatch(
                f"model expects {len(self.feature_names)} features, "
                f"table has {features.n_features}")
        x = apply_minmax(features, self.normalizer)
        if self.pca_model is not None:
            x = pca.transform(self.pca_model, x, self.n_components)
        return x

    def predict_proba(self, features: FeatureMatrix) -> np.ndarray:
        """Probability of encoded class 1 per row."""
        return self.model.predict_proba(self._project(features))

    def positive_scores(self, features: FeatureMatrix) -> np.ndarray:
        p1 = self.predict_proba(features)
        return p1 if self.spec.positive_label == 1 else 1.0 - p1

    def predict_label(self, features: FeatureMatrix, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(features) >= threshold).astype(int)

    def to_json_dict(self) -> dict:
        return {
            "spec": {
                "classifier": self.spec.classifier,
                "classifier_params": dict(self.spec.classifier_params),
                "variance_ratio": self.spec.variance_ratio,
                "positive_label": self.spec.positive_label,
                "seed": self.spec.seed,
            },
            "normalizer": self.normalizer.to_json_dict(),
            "pca": None if self.pca_model is None else self.pca_model.to_json_dict(),
            "n_components": self.n_components,
            "model": self.model.to_json_dict(),
            "feature_names": list(self.feature_names),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "FittedPipeline":
        from .dataset import NormalizerParams

        spec = PipelineSpec(**doc["spec"])
        model_doc = doc["model"]
        if spec.classifier == "ngboost":
            model = ngb.NgbModel.from_json_dict(model_doc)
        else:
            model = gbdt.GbdtModel.from_json_dict(model_doc)
        return cls(
            spec=spec,
            normalizer=NormalizerParams.from_json_dict(doc["normalizer"]),
            pca_model=None if doc["pca"] is None else pca.PcaModel.from_json_dict(doc["pca"]),
            n_components=doc["n_components"],
            model=model,
            feature_names=tuple(doc["feature_names"]),
        )


def fit_pipeline(features: FeatureMatrix, labels: LabelVector,
                 spec: PipelineSpec) -> FittedPipeline:
    """Fit normalizer, projection, and classifier on one training partition."""
    normalizer = fit_minmax(features)
    x = apply_minmax(features, normalizer)
    pca_model = None
    k = None
    if spec.variance_ratio is not None:
        pca_model = pca.fit_pca(x)
        k = pca.select_components(pca_model, spec.variance_ratio)
        x = pca.transform(pca_model, x, k)
    if spec.classifier == "ngboost":
        config = ngb.NgbConfig(**spec.classifier_params)
        model = ngb.fit(x, labels, config, seed=spec.seed)
    else:
        params = gbdt.GbdtParams(**spec.classifier_params)
        model = gbdt.fit(x, labels, params)
    return FittedPipeline(spec, normalizer, pca_model, k, model, features.feature_names)


def evaluate_pipeline(fitted: FittedPipeline, features: FeatureMatrix,
                      labels: LabelVector):
    """Confusion matrix, scalar metrics (plus AUC), and ROC on held-out rows."""
    pred = fitted.predict_label(features)
    cm = confusion(pred, labels, fitted.spec.positive_label)
    record = scalar_metrics(cm)
    roc = roc_auc(fitted.positive_scores(features), labels, fitted.spec.positive_label)
    record["auc"] = roc.auc
    return cm, record, roc


@dataclass
class FoldRecord:
    fold: int
    confusion: ConfusionMatrix
    metrics: dict
    roc: RocCurve


@dataclass
class CvReport:
    """Per-fold records, their mean/SD, and the overlapped confusion matrix."""

    k: int
    seed: int
    folds: list[FoldRecord]
    mean: dict
    sd: dict
    overlapped: ConfusionMatrix

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "folds": [
                {"fold": r.fold, "confusion": r.confusion.to_dict(),
                 "metrics": r.metrics}
                for r in self.folds
            ],
            "mean": self.mean,
            "sd": self.sd,
            "overlapped_confusion": self.overlapped.to_dict(),
            "overlapped_metrics": scalar_metrics(self.overlapped),
        }


def cross_validate(features: FeatureMatrix, labels: LabelVector,
                   spec: PipelineSpec, plan: FoldPlan,
                   spec_factory=None) -> CvReport:
    """Fit on k-1 folds, evaluate on the held-out fold, aggregate.

    Preprocessing (normalizer and projection) is refit inside every
    training partition so held-out rows never leak into it. spec_factory,
    when given, is called as spec_factory(fold, train_features,
    train_labels) and may return a per-fold PipelineSpec (used by
    tune-per-fold runs). Folds are independent and could evaluate in
    parallel; failures abort with the fold index.
    """
    if plan.n_samples != features.n_samples:
        raise ValueError("fold plan does not cover the data")
    records = []
    overlapped = ConfusionMatrix(0, 0, 0, 0)
    for fold in range(plan.k):
        train_idx = plan.train_indices(fold)
        test_idx = plan.test_indices(fold)
        try:
            fold_spec = spec if spec_factory is None else spec_factory(
                fold + 1, features.take(train_idx), labels.take(train_idx))
            fitted = fit_pipeline(features.take(train_idx), labels.take(train_idx),
                                  fold_spec)
            cm, record, roc = evaluate_pipeline(fitted, features.take(test_idx),
                                                labels.take(test_idx))
        except Exception as exc:
            raise FoldFitError(fold + 1, str(exc)) from exc
        records.append(FoldRecord(fold + 1, cm, record, roc))  # 1-based, Fold 1..k
        overlapped = overlapped + cm
    mean, sd = aggregate([r.metrics for r in records])
    return CvReport(plan.k, plan.seed, records, mean, sd, overlapped)
