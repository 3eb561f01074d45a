"""Boosted Bernoulli classifier trained on Fisher-preconditioned gradients.

Each stage fits a base regressor to the per-sample natural gradient of the
log score at the current logits, then shifts every logit against the fitted
values by the shrinkage rate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dataset import FeatureMatrix, LabelVector
from .learners import RegressionTree, RidgeRegressor, learner_from_json_dict

P_CLAMP = 1e-12


def sigmoid(theta):
    """Numerically stable logistic function."""
    theta = np.asarray(theta, dtype=float)
    out = np.empty_like(theta)
    pos = theta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-theta[pos]))
    e = np.exp(theta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def log_score(theta, y):
    """Negative Bernoulli log-likelihood of outcome y at logit theta.

    Evaluated as softplus(theta) - y * theta, which never exponentiates a
    large positive logit.
    """
    theta = np.asarray(theta, dtype=float)
    return np.logaddexp(0.0, theta) - np.asarray(y, dtype=float) * theta


def score_gradient(theta, y):
    """Ordinary gradient of log_score with respect to theta: p - y."""
    return sigmoid(theta) - np.asarray(y, dtype=float)


def fisher_information(theta):
    """Bernoulli Fisher information p(1-p), with p clamped away from {0,1}."""
    p = np.clip(sigmoid(theta), P_CLAMP, 1.0 - P_CLAMP)
    return p * (1.0 - p)


def natural_gradient(theta, y):
    """Fisher-preconditioned gradient (p - y) / (p (1 - p))."""
    p = np.clip(sigmoid(theta), P_CLAMP, 1.0 - P_CLAMP)
    return (p - np.asarray(y, dtype=float)) / (p * (1.0 - p))


def fit_initial(labels: LabelVector) -> float:
    """Closed-form minimizer of the summed log score: logit of the label mean."""
    m = float(np.clip(labels.labels.mean(), P_CLAMP, 1.0 - P_CLAMP))
    return float(np.log(m / (1.0 - m)))


@dataclass(frozen=True)
class NgbConfig:
    """Boosting length, shrinkage, and base-learner choice."""

    n_estimators: int = 50
    learning_rate: float = 0.1
    base_learner_kind: str = "tree"
    tree_max_depth: int = 3
    tree_min_samples_leaf: int = 5
    ridge_penalty: float = 1e-3

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be at least 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.base_learner_kind not in ("tree", "ridge"):
            raise ValueError(f"unsupported base learner: {self.base_learner_kind!r}")

    def make_learner(self):
        if self.base_learner_kind == "tree":
            return RegressionTree(self.tree_max_depth, self.tree_min_samples_leaf)
        return RidgeRegressor(self.ridge_penalty)


@dataclass(frozen=True)
class NgbModel:
    """Initial logit plus fitted stages; immutable and shareable."""

    theta0: float
    stages: tuple
    learning_rate: float
    config: NgbConfig

    def predict_margin(self, features: FeatureMatrix) -> np.ndarray:
        x = features.values
        margin = np.full(x.shape[0], self.theta0)
        for stage in self.stages:
            margin -= self.learning_rate * stage.predict(x)
        return margin

    def predict_proba(self, features: FeatureMatrix) -> np.ndarray:
        """Probability of class 1 per sample."""
        return sigmoid(self.predict_margin(features))

    def predict_label(self, features: FeatureMatrix, threshold: float = 0.5) -> np.ndarray:
        """Label 1 iff p >= threshold (ties go to the positive class)."""
        return (self.predict_proba(features) >= threshold).astype(int)

    def to_json_dict(self) -> dict:
        return {
            "theta0": self.theta0,
            "learning_rate": self.learning_rate,
            "config": {
                "n_estimators": self.config.n_estimators,
                "learning_rate": self.config.learning_rate,
                "base_learner_kind": self.config.base_learner_kind,
                "tree_max_depth": self.config.tree_max_depth,
                "tree_min_samples_leaf": self.config.tree_min_samples_leaf,
                "ridge_penalty": self.config.ridge_penalty,
            },
            "stages": [s.to_json_dict() for s in self.stages],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "NgbModel":
        return cls(
            theta0=float(doc["theta0"]),
            stages=tuple(learner_from_json_dict(s) for s in doc["stages"]),
            learning_rate=float(doc["learning_rate"]),
            config=NgbConfig(**doc["config"]),
        )


def fit(features: FeatureMatrix, labels: LabelVector, config: NgbConfig,
        seed: int = 0) -> NgbModel:
    """Run the boosting stages on aligned features/labels.

    Stage m fits a base learner to the natural gradients at the current
    logits, then updates theta_i <- theta_i - learning_rate * f_m(x_i).
    The base learners are deterministic, so the fit depends only on the
    data and config; seed is accepted for interface stability.
    """
    del seed
    if features.n_samples != labels.n_samples:
        raise ValueError("features and labels are misaligned")
    y = labels.labels.astype(float)
    theta0 = fit_initial(labels)
    if np.unique(labels.labels).size < 2:
        warnings.warn("single-class training set; fitting a constant model")
        return NgbModel(theta0, (), config.learning_rate, config)

    x = features.values
    theta = np.full(x.shape[0], theta0)
    stages = []
    for _ in range(config.n_estimators):
        grad = natural_gradient(theta, y)
        learner = config.make_learner().fit(x, grad)
        theta = theta - config.learning_rate * learner.predict(x)
        stages.append(learner)
    return NgbModel(theta0, tuple(stages), config.learning_rate, config)
