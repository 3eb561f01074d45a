"""Hyperparameter search: box encoding, inner-CV fitness, vulture-search driver."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import avoa
from .dataset import FeatureMatrix, LabelVector, make_stratified_folds
from .metrics import PipelineSpec, fit_pipeline


@dataclass(frozen=True)
class ContinuousDim:
    name: str
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"{self.name}: lo must be below hi")

    @property
    def log_scaled(self) -> bool:
        # wide positive ranges are sampled geometrically, otherwise small
        # values would almost never be proposed
        return self.lo > 0 and self.hi / self.lo > 100

    def decode(self, u: float):
        if self.log_scaled:
            return math.exp(math.log(self.lo) + u * (math.log(self.hi) - math.log(self.lo)))
        return self.lo + u * (self.hi - self.lo)


@dataclass(frozen=True)
class IntegerDim:
    name: str
    lo: int
    hi: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"{self.name}: lo must be below hi")

    def decode(self, u: float):
        return int(min(max(math.floor(self.lo + u * (self.hi - self.lo + 1)),
                           self.lo), self.hi))


@dataclass(frozen=True)
class CategoricalDim:
    name: str
    options: tuple

    def __post_init__(self):
        if not self.options:
            raise ValueError(f"{self.name}: options must be nonempty")
        object.__setattr__(self, "options", tuple(self.options))

    def decode(self, u: float):
        return self.options[min(int(u * len(self.options)), len(self.options) - 1)]


@dataclass(frozen=True)
class HyperSpace:
    """Ordered search dimensions; the order fixes the box layout."""

    dimensions: tuple

    def __post_init__(self):
        object.__setattr__(self, "dimensions", tuple(self.dimensions))


def ngboost_space(full: bool = False) -> HyperSpace:
    """Search space for the natural-gradient booster.

    The default covers the two sensitive knobs; full=True adds the
    base-learner and output-distribution categoricals in their declared
    option order (indices are stable even for options this build cannot
    fit, which simply score worst-possible).
    """
    dims = [ContinuousDim("learning_rate", 1e-7, 0.9),
            IntegerDim("n_estimators", 3, 20)]
    if full:
        dims.append(CategoricalDim("base_learner",
                                   ("SVR", "DecisionTreeRegressor", "Ridge")))
        dims.append(CategoricalDim("probability_distribution",
                                   ("k_categorical", "Bernoulli")))
    return HyperSpace(tuple(dims))


def gbdt_space(full: bool = False) -> HyperSpace:
    """Search space for the second-order boosted-tree baseline."""
    dims = [ContinuousDim("learning_rate", 1e-7, 0.9),
            ContinuousDim("gamma", 1e-5, 0.9),
            IntegerDim("max_depth", 5, 200),
            IntegerDim("max_leaves", 5, 800)]
    if full:
        dims.insert(0, CategoricalDim("booster", ("gblinear", "gbtree")))
    return HyperSpace(tuple(dims))


def encode_space(space: HyperSpace) -> avoa.SearchBounds:
    """One unit-box dimension per hyperparameter; ranges live in decode."""
    n = len(space.dimensions)
    if n == 0:
        raise ValueError("hyperparameter space is empty")
    return avoa.SearchBounds(np.zeros(n), np.ones(n))


def decode_position(space: HyperSpace, position) -> dict:
    """Map a unit-box position to a named parameter record."""
    pos = np.asarray(position, dtype=float)
    if pos.shape != (len(space.dimensions),):
        raise ValueError("position length does not match the space")
    return {dim.name: dim.decode(float(u)) for dim, u in zip(space.dimensions, pos)}


@dataclass
class TrialRecord:
    """One fitness evaluation; wall_time stays in memory only (reports must
    be byte-reproducible from inputs and seed)."""

    params: dict
    fitness: float
    fold_accuracies: list[float]
    wall_time: float
    failed: bool

    def to_json_dict(self) -> dict:
        return {"params": self.params, "fitness": self.fitness,
                "fold_accuracies": self.fold_accuracies, "failed": self.failed}


@dataclass(frozen=True)
class TunerConfig:
    """Search budget, inner validation structure, and pipeline context."""

    avoa: avoa.AvoaParams = field(default_factory=avoa.AvoaParams)
    inner_folds: int = 3
    seed: int = 0
    budget: int | None = None
    variance_ratio: float | None = 0.97
    positive_label: int = 1
    fixed_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.inner_folds < 2:
            raise ValueError("inner_folds must be at least 2")


def _classifier_params(classifier: str, decoded: dict, fixed: dict) -> dict:
    """Translate a decoded trial into classifier constructor kwargs.

    Raises for options outside this build (SVR base learner, the
    k_categorical distribution, the gblinear booster); the caller scores
    such trials worst-possible instead of aborting the search.
    """
    params = dict(fixed)
    if classifier == "ngboost":
        if "learning_rate" in decoded:
            params["learning_rate"] = float(decoded["learning_rate"])
        if "n_estimators" in decoded:
            params["n_estimators"] = int(decoded["n_estimators"])
        base = decoded.get("base_learner")
        if base is not None:
            mapping = {"DecisionTreeRegressor": "tree", "Ridge": "ridge"}
            if base not in mapping:
                raise ValueError(f"base learner not available in this build: {base}")
            params["base_learner_kind"] = mapping[base]
        dist = decoded.get("probability_distribution")
        if dist is not None and dist != "Bernoulli":
            raise ValueError(f"distribution not available in this build: {dist}")
    elif classifier == "gbdt":
        for key in ("learning_rate", "gamma"):
            if key in decoded:
                params[key] = float(decoded[key])
        for key in ("max_depth", "max_leaves"):
            if key in decoded:
                params[key] = int(decoded[key])
        booster = decoded.get("booster")
        if booster is not None and booster != "gbtree":
            raise ValueError(f"booster not available in this build: {booster}")
    else:
        raise ValueError(f"unknown classifier: {classifier!r}")
    return params


def _evaluate_trial(decoded: dict, features: FeatureMatrix, labels: LabelVector,
                    classifier: str, config: TunerConfig):
    """(1 - mean inner-CV accuracy, fold accuracies, failed flag).

    Only the provided partition is ever read; the inner folds are
    stratified on it with the config seed, so a trial is a pure function
    of (params, data, seed).
    """
    try:
        params = _classifier_params(classifier, decoded, config.fixed_params)
        spec = PipelineSpec(classifier=classifier, classifier_params=params,
                            variance_ratio=config.variance_ratio,
                            positive_label=config.positive_label, seed=config.seed)
        plan = make_stratified_folds(labels, config.inner_folds, config.seed)
        accs = []
        for fold in range(plan.k):
            train_idx = plan.train_indices(fold)
            test_idx = plan.test_indices(fold)
            fitted = fit_pipeline(features.take(train_idx), labels.take(train_idx),
                                  spec)
            pred = fitted.predict_label(features.take(test_idx))
            accs.append(float(np.mean(pred == labels.take(test_idx).labels)))
        return 1.0 - float(np.mean(accs)), accs, False
    except Exception:
        return 1.0, [], True


def fitness(params: dict, features: FeatureMatrix, labels: LabelVector,
            inner_folds: int, seed: int, classifier: str = "ngboost",
            variance_ratio: float | None = 0.97) -> float:
    """1 - mean stratified inner-CV accuracy of the decoded parameters."""
    config = TunerConfig(inner_folds=inner_folds, seed=seed,
                         variance_ratio=variance_ratio)
    value, _, _ = _evaluate_trial(params, features, labels, classifier, config)
    return value


def tune(space: HyperSpace, classifier: str, features: FeatureMatrix,
         labels: LabelVector, config: TunerConfig):
    """Run the vulture search over the encoded box.

    Returns (best parameter record, trial list, convergence trace); the
    trace fitness values are 1 - accuracy, so the best accuracy per
    iteration is 1 - best_fitness.
    """
    bounds = encode_space(space)
    required = config.avoa.population_size * (config.avoa.max_iterations + 1)
    if config.budget is not None and config.budget < required:
        raise ValueError(f"budget {config.budget} below the "
                         f"{required} evaluations this configuration performs")

    trials: list[TrialRecord] = []

    def objective(position):
        start = time.perf_counter()
        decoded = decode_position(space, position)
        value, accs, failed = _evaluate_trial(decoded, features, labels,
                                              classifier, config)
        trials.append(TrialRecord(decoded, value, accs,
                                  time.perf_counter() - start, failed))
        return value

    best_state, trace = avoa.optimize(objective, bounds, config.avoa)
    best_params = decode_position(space, best_state.position)
    return best_params, trials, trace


def best_accuracy_series(trace: avoa.ConvergenceTrace) -> list[float]:
    """Convergence expressed as the best accuracy reached per iteration."""
    return [1.0 - f for f in trace.best_fitness_per_iteration]
