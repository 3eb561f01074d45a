"""Base regressors fitted to per-sample gradient targets inside boosting loops."""

from __future__ import annotations

import numpy as np


class RegressionTree:
    """Depth-limited least-squares tree with exact, deterministic splits.

    Candidate thresholds are midpoints between consecutive sorted unique
    feature values; the split with the largest squared-error reduction
    wins, ties broken toward the lowest feature index then the lowest
    threshold. Samples are scanned in (value, target) order and leaf means
    are summed over sorted targets, so permuting the training rows yields
    a bit-identical tree.
    """

    def __init__(self, max_depth: int = 3, min_samples_leaf: int = 5):
        if max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be at least 1")
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.root: dict | None = None

    def fit(self, X, y) -> "RegressionTree":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError("X must be 2-D with one target per row")
        self.root = self._grow(X, y, np.arange(X.shape[0]), depth=0)
        return self

    def _leaf_value(self, y_subset: np.ndarray) -> float:
        # canonical summation order keeps the fit row-order independent
        return float(np.sort(y_subset).sum() / y_subset.size)

    def _grow(self, X, y, idx, depth) -> dict:
        if depth >= self.max_depth or idx.size < 2 * self.min_samples_leaf:
            return {"value": self._leaf_value(y[idx])}
        best = self._best_split(X, y, idx)
        if best is None:
            return {"value": self._leaf_value(y[idx])}
        feature, threshold = best
        mask = X[idx, feature] < threshold
        return {
            "feature": int(feature),
            "threshold": float(threshold),
            "left": self._grow(X, y, idx[mask], depth + 1),
            "right": self._grow(X, y, idx[~mask], depth + 1),
        }

    def _best_split(self, X, y, idx):
        best_gain = 0.0
        best = None
        n = idx.size
        y_all = y[idx]
        sse_parent = float(np.sum((y_all - y_all.mean()) ** 2))
        for j in range(X.shape[1]):
            xj = X[idx, j]
            order = np.lexsort((y_all, xj))  # value then target: canonical
            xs, ys = xj[order], y_all[order]
            cut = np.flatnonzero(xs[:-1] < xs[1:]) + 1  # left-side sizes
            cut = cut[(cut >= self.min_samples_leaf) & (n - cut >= self.min_samples_leaf)]
            if cut.size == 0:
                continue
            csum = np.cumsum(ys)
            csq = np.cumsum(ys ** 2)
            nl = cut.astype(float)
            sl, ql = csum[cut - 1], csq[cut - 1]
            sr, qr = csum[-1] - sl, csq[-1] - ql
            sse = (ql - sl ** 2 / nl) + (qr - sr ** 2 / (n - nl))
            gains = sse_parent - sse
            pos = int(np.argmax(gains))  # first max: lowest threshold wins ties
            if gains[pos] > best_gain:
                best_gain = float(gains[pos])
                i = cut[pos]
                best = (j, 0.5 * (xs[i - 1] + xs[i]))
        return best

    def predict(self, X) -> np.ndarray:
        if self.root is None:
            raise RuntimeError("tree is not fitted")
        X = np.asarray(X, dtype=float)
        out = np.empty(X.shape[0])
        for i, row in enumerate(X):
            node = self.root
            while "value" not in node:
                node = node["left"] if row[node["feature"]] < node["threshold"] else node["right"]
            out[i] = node["value"]
        return out

    def to_json_dict(self) -> dict:
        return {"kind": "tree", "max_depth": self.max_depth,
                "min_samples_leaf": self.min_samples_leaf, "root": self.root}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "RegressionTree":
        tree = cls(doc["max_depth"], doc["min_samples_leaf"])
        tree.root = doc["root"]
        return tree


class RidgeRegressor:
    """L2-penalized linear fit with an unpenalized intercept."""

    def __init__(self, penalty: float = 1e-3):
        if penalty < 0:
            raise ValueError("penalty must be nonnegative")
        self.penalty = penalty
        self.coef: np.ndarray | None = None
        self.intercept: float = 0.0

    def fit(self, X, y) -> "RidgeRegressor":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        x_mean = X.mean(axis=0)
        y_mean = y.mean()
        xc = X - x_mean
        yc = y - y_mean
        gram = xc.T @ xc + self.penalty * np.eye(X.shape[1])
        self.coef = np.linalg.solve(gram, xc.T @ yc)
        self.intercept = float(y_mean - x_mean @ self.coef)
        return self

    def predict(self, X) -> np.ndarray:
        if self.coef is None:
            raise RuntimeError("ridge regressor is not fitted")
        return np.asarray(X, dtype=float) @ self.coef + self.intercept

    def to_json_dict(self) -> dict:
        return {"kind": "ridge", "penalty": self.penalty,
                "coef": self.coef.tolist(), "intercept": self.intercept}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "RidgeRegressor":
        reg = cls(doc["penalty"])
        reg.coef = np.asarray(doc["coef"], dtype=float)
        reg.intercept = float(doc["intercept"])
        return reg


def learner_from_json_dict(doc: dict):
    if doc["kind"] == "tree":
        return RegressionTree.from_json_dict(doc)
    if doc["kind"] == "ridge":
        return RidgeRegressor.from_json_dict(doc)
    raise ValueError(f"unknown base learner kind: {doc['kind']!r}")
