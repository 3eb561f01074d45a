"""Feature-table ingestion, min-max scaling, and stratified fold planning."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np


class SchemaError(ValueError):
    """Raised when an input table violates the expected CSV schema."""


@dataclass(frozen=True)
class FeatureMatrix:
    """Row-major table of real-valued feature vectors.

    Immutable after construction; safe to share across threads.
    """

    values: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("feature matrix must be 2-D with at least one row and column")
        if not np.isfinite(v).all():
            raise ValueError("feature matrix contains non-finite entries")
        names = tuple(self.feature_names)
        if len(names) != v.shape[1]:
            raise ValueError("feature_names length does not match column count")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def take(self, indices) -> "FeatureMatrix":
        """Row subset in the given order."""
        return FeatureMatrix(self.values[np.asarray(indices)], self.feature_names)


@dataclass(frozen=True)
class LabelVector:
    """Binary labels aligned with a FeatureMatrix, plus the encoding map."""

    labels: np.ndarray
    class_names: dict[int, str]

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=int)
        if lab.ndim != 1 or lab.size < 1:
            raise ValueError("labels must be a non-empty 1-D vector")
        present = set(int(x) for x in np.unique(lab))
        if not present <= {0, 1}:
            raise ValueError(f"labels must be encoded in {{0,1}}, got {sorted(present)}")
        if not present <= set(self.class_names):
            raise ValueError("class_names missing an encoded label")
        if len(set(self.class_names.values())) != len(self.class_names):
            raise ValueError("class_names must be a bijection")
        object.__setattr__(self, "labels", lab)
        object.__setattr__(self, "class_names", dict(self.class_names))

    @property
    def n_samples(self) -> int:
        return self.labels.size

    def decode(self) -> list[str]:
        """Original class strings in sample order."""
        return [self.class_names[int(x)] for x in self.labels]

    def take(self, indices) -> "LabelVector":
        return LabelVector(self.labels[np.asarray(indices)], self.class_names)


@dataclass(frozen=True)
class NormalizerParams:
    """Per-feature min/max captured on the training rows."""

    per_feature_min: np.ndarray
    per_feature_max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.per_feature_min, dtype=float)
        hi = np.asarray(self.per_feature_max, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("min/max must be 1-D vectors of equal length")
        if (lo > hi).any():
            raise ValueError("per-feature min exceeds max")
        object.__setattr__(self, "per_feature_min", lo)
        object.__setattr__(self, "per_feature_max", hi)

    @property
    def n_features(self) -> int:
        return self.per_feature_min.size

    def to_json_dict(self) -> dict:
        return {
            "per_feature_min": self.per_feature_min.tolist(),
            "per_feature_max": self.per_feature_max.tolist(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "NormalizerParams":
        return cls(np.asarray(doc["per_feature_min"], dtype=float),
                   np.asarray(doc["per_feature_max"], dtype=float))


@dataclass(frozen=True)
class FoldPlan:
    """Per-sample fold assignment, reproducible from (labels, k, seed)."""

    k: int
    assignments: np.ndarray
    seed: int

    def __post_init__(self):
        a = np.asarray(self.assignments, dtype=int)
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if a.ndim != 1 or a.min() < 0 or a.max() >= self.k:
            raise ValueError("fold assignments out of range")
        object.__setattr__(self, "assignments", a)

    @property
    def n_samples(self) -> int:
        return self.assignments.size

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def to_json_dict(self) -> dict:
        return {"k": self.k, "seed": self.seed, "assignments": self.assignments.tolist()}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "FoldPlan":
        return cls(int(doc["k"]), np.asarray(doc["assignments"], dtype=int), int(doc["seed"]))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True)
            fh.write("\n")


def load_feature_table(path, label_column: str, class_map: dict[str, int] | None = None):
    """Parse a CSV feature table into (FeatureMatrix, LabelVector).

    First row is the header; the named label column holds class strings,
    every other column must parse as a finite number. Row order is
    preserved. Labels are encoded by first appearance unless class_map
    (original string -> {0,1}) is given.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except FileNotFoundError:
        raise SchemaError(f"feature table not found: {path}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("feature table is empty") from None
        if label_column not in header:
            raise SchemaError(f"label column not found: {label_column!r}")
        label_idx = header.index(label_column)
        feature_names = tuple(name for i, name in enumerate(header) if i != label_idx)
        if not feature_names:
            raise SchemaError("feature table has no feature columns")

        rows: list[list[float]] = []
        raw_labels: list[str] = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SchemaError(f"ragged row at line {lineno}: "
                                  f"expected {len(header)} cells, got {len(row)}")
            raw_labels.append(row[label_idx])
            cells = []
            for i, cell in enumerate(row):
                if i == label_idx:
                    continue
                try:
                    x = float(cell)
                except ValueError:
                    raise SchemaError(f"non-numeric feature cell at line {lineno}, "
                                      f"column {header[i]!r}: {cell!r}") from None
                if not math.isfinite(x):
                    raise SchemaError(f"non-finite feature cell at line {lineno}, "
                                      f"column {header[i]!r}")
                cells.append(x)
            rows.append(cells)

    if not rows:
        raise SchemaError("feature table has no data rows")

    if class_map is None:
        encoding: dict[str, int] = {}
        for s in raw_labels:
            if s not in encoding:
                encoding[s] = len(encoding)
    else:
        encoding = dict(class_map)
        missing = sorted(set(raw_labels) - set(encoding))
        if missing:
            raise SchemaError(f"labels absent from class map: {missing}")
    if len(set(raw_labels)) > 2 or max(encoding.values(), default=0) > 1:
        raise SchemaError(f"more than two distinct labels: {sorted(set(raw_labels))[:5]}")

    matrix = FeatureMatrix(np.asarray(rows, dtype=float), feature_names)
    labels = LabelVector(np.asarray([encoding[s] for s in raw_labels], dtype=int),
                         {v: k for k, v in encoding.items()})
    return matrix, labels


def fit_minmax(m: FeatureMatrix) -> NormalizerParams:
    """Per-feature min/max over all rows of m."""
    return NormalizerParams(m.values.min(axis=0), m.values.max(axis=0))


def apply_minmax(m: FeatureMatrix, p: NormalizerParams) -> FeatureMatrix:
    """Linear rescale x' = (x - min) / (max - min), per feature.

    Constant features map to 0. Values outside the fitted range are not
    clipped, so transformed test rows may leave [0, 1].
    """
    if m.n_features != p.n_features:
        raise ValueError(f"feature-count mismatch: matrix has {m.n_features}, "
                         f"normalizer fitted on {p.n_features}")
    span = p.per_feature_max - p.per_feature_min
    out = np.zeros_like(m.values)
    live = span > 0
    out[:, live] = (m.values[:, live] - p.per_feature_min[live]) / span[live]
    return FeatureMatrix(out, m.feature_names)


def make_stratified_folds(labels: LabelVector, k: int, seed: int,
                          stratified: bool = True) -> FoldPlan:
    """Deterministic k-fold assignment.

    Stratified mode shuffles each class with the seeded generator and
    deals it round-robin; per-class remainders start at a rotating fold
    offset so total fold sizes also differ by at most one.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    y = labels.labels
    rng = np.random.default_rng(seed)
    assignments = np.empty(y.size, dtype=int)

    if not stratified:
        perm = rng.permutation(y.size)
        base, extra = divmod(y.size, k)
        pos = 0
        for f in range(k):
            size = base + (1 if f < extra else 0)
            assignments[perm[pos:pos + size]] = f
            pos += size
        return FoldPlan(k, assignments, seed)

    start = 0
    for c in sorted(int(x) for x in np.unique(y)):
        idx = np.flatnonzero(y == c)
        if idx.size < k:
            raise ValueError(f"class {c} has {idx.size} members, fewer than k={k}")
        idx = rng.permutation(idx)
        base, extra = divmod(idx.size, k)
        pos = 0
        for f in range(k):
            size = base + (1 if (f - start) % k < extra else 0)
            assignments[idx[pos:pos + size]] = f
            pos += size
        start = (start + extra) % k
    return FoldPlan(k, assignments, seed)
