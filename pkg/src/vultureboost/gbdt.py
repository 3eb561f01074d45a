"""Second-order boosted trees: logistic loss, closed-form leaf weights,
splits accepted only when they lower the regularized structure score."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataset import FeatureMatrix, LabelVector
from .ngb import P_CLAMP, sigmoid

H_FLOOR = 1e-16


def grad_hess_logloss(pred_logit, y):
    """First and second derivatives of the logistic loss at the given logits."""
    p = sigmoid(pred_logit)
    g = p - np.asarray(y, dtype=float)
    h = np.maximum(p * (1.0 - p), H_FLOOR)
    return g, h


def leaf_weight(G: float, H: float, lam: float) -> float:
    """Optimal leaf output -G / (H + lambda)."""
    denom = H + lam
    if denom <= 0:
        raise ValueError("H + lambda must be positive")
    return -G / denom


def structure_score(leaf_stats, lam: float, gamma: float) -> float:
    """Regularized objective of a fixed tree partition.

    leaf_stats is a sequence of per-leaf (G, H) sums; the score is
    -1/2 * sum G^2/(H+lambda) + gamma * T, lower is better.
    """
    total = 0.0
    for G, H in leaf_stats:
        denom = H + lam
        if denom <= 0:
            raise ValueError("H + lambda must be positive for every leaf")
        total += G * G / denom
    return -0.5 * total + gamma * len(leaf_stats)


@dataclass(frozen=True)
class GbdtParams:
    """Boosting rounds and tree regularization knobs."""

    n_rounds: int = 50
    learning_rate: float = 0.1
    lam: float = 1.0
    gamma: float = 0.0
    max_depth: int = 3
    max_leaves: int = 31

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be at least 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.lam < 0 or self.gamma < 0:
            raise ValueError("lam and gamma must be nonnegative")
        if self.max_depth < 1 or self.max_leaves < 2:
            raise ValueError("max_depth must be >= 1 and max_leaves >= 2")


@dataclass
class TreeNode:
    """Either a split (feature, threshold, children) or a leaf (weight)."""

    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    weight: float | None = None
    gain: float | None = None

    @property
    def is_leaf(self) -> bool:
        return self.weight is not None

    def to_json_dict(self) -> dict:
        if self.is_leaf:
            return {"weight": self.weight}
        return {"feature": self.feature, "threshold": self.threshold,
                "gain": self.gain,
                "left": self.left.to_json_dict(), "right": self.right.to_json_dict()}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TreeNode":
        if "weight" in doc:
            return cls(weight=float(doc["weight"]))
        return cls(feature=int(doc["feature"]), threshold=float(doc["threshold"]),
                   gain=doc.get("gain"),
                   left=cls.from_json_dict(doc["left"]),
                   right=cls.from_json_dict(doc["right"]))


def _tree_values(node: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])
    for i, row in enumerate(X):
        cur = node
        while not cur.is_leaf:
            cur = cur.left if row[cur.feature] < cur.threshold else cur.right
        out[i] = cur.weight
    return out


def _exact_gain(X, g, h, idx, feature, threshold, params: GbdtParams) -> float:
    """Score drop of one candidate, summed per routed subset in index order.

    Uses the same arithmetic as any direct enumeration over the node, so
    tie-breaking is reproducible against a brute-force check.
    """
    mask = X[idx, feature] < threshold
    left, right = idx[mask], idx[~mask]
    parent = structure_score([(float(np.sum(g[idx])), float(np.sum(h[idx])))],
                             params.lam, params.gamma)
    children = structure_score(
        [(float(np.sum(g[left])), float(np.sum(h[left]))),
         (float(np.sum(g[right])), float(np.sum(h[right])))],
        params.lam, params.gamma)
    return parent - children


def _best_split(X, g, h, idx, params: GbdtParams):
    """Exact greedy search; returns (feature, threshold, gain) or None.

    A prefix-sum scan ranks every candidate; the ones within a small
    slack of the scan maximum are re-scored with _exact_gain, whose
    summation order is candidate-independent, and ties break toward the
    lowest feature index then the lowest threshold.
    """
    candidates = []
    for j in range(X.shape[1]):
        xj = X[idx, j]
        order = np.argsort(xj, kind="stable")
        xs = xj[order]
        gs = g[idx][order]
        hs = h[idx][order]
        cut = np.flatnonzero(xs[:-1] < xs[1:]) + 1
        if cut.size == 0:
            continue
        cg, ch = np.cumsum(gs), np.cumsum(hs)
        gl, hl = cg[cut - 1], ch[cut - 1]
        gr, hr = cg[-1] - gl, ch[-1] - hl
        gains = 0.5 * (gl ** 2 / (hl + params.lam) + gr ** 2 / (hr + params.lam)
                       - cg[-1] ** 2 / (ch[-1] + params.lam)) - params.gamma
        thresholds = 0.5 * (xs[cut - 1] + xs[cut])
        candidates.append((j, thresholds, gains))
    if not candidates:
        return None

    scan_max = max(float(gains.max()) for _, _, gains in candidates)
    slack = 1e-6 * max(1.0, abs(scan_max))  # far above prefix round-off
    best = None
    best_gain = -np.inf
    for j, thresholds, gains in candidates:
        for pos in np.flatnonzero(gains >= scan_max - slack):
            thr = float(thresholds[pos])
            gain = _exact_gain(X, g, h, idx, j, thr, params)
            if gain > best_gain:  # strict: earlier feature/threshold keeps ties
                best_gain = gain
                best = (j, thr, gain)
    return best


def _grow_tree(X, g, h, params: GbdtParams) -> TreeNode:
    leaf_budget = [1]  # current leaf count if growth stopped now

    def node_stats(idx):
        return float(np.sum(g[idx])), float(np.sum(h[idx]))

    def grow(idx, depth) -> TreeNode:
        G, H = node_stats(idx)
        if depth >= params.max_depth or leaf_budget[0] >= params.max_leaves:
            return TreeNode(weight=leaf_weight(G, H, params.lam))
        found = _best_split(X, g, h, idx, params)
        if found is None:
            return TreeNode(weight=leaf_weight(G, H, params.lam))
        feature, threshold, gain = found
        # zero-gain splits are kept so symmetric-gradient patterns (XOR)
        # can still be carved out at deeper levels
        if gain < 0:
            return TreeNode(weight=leaf_weight(G, H, params.lam))
        mask = X[idx, feature] < threshold
        left_idx, right_idx = idx[mask], idx[~mask]
        leaf_budget[0] += 1
        return TreeNode(feature=feature, threshold=threshold, gain=gain,
                        left=grow(left_idx, depth + 1),
                        right=grow(right_idx, depth + 1))

    return grow(np.arange(X.shape[0]), 0)


@dataclass(frozen=True)
class GbdtModel:
    """Base logit plus the fitted tree sequence; immutable and shareable."""

    base_score: float
    trees: tuple
    params: GbdtParams

    def predict_margin(self, features: FeatureMatrix) -> np.ndarray:
        x = features.values
        margin = np.full(x.shape[0], self.base_score)
        for tree in self.trees:
            margin += self.params.learning_rate * _tree_values(tree, x)
        return margin

    def predict_proba(self, features: FeatureMatrix) -> np.ndarray:
        """Probability of class 1 per sample."""
        return sigmoid(self.predict_margin(features))

    def predict_label(self, features: FeatureMatrix, threshold: float = 0.5) -> np.ndarray:
        """Same decision rule as the natural-gradient model: ties positive."""
        return (self.predict_proba(features) >= threshold).astype(int)

    def to_json_dict(self) -> dict:
        return {
            "base_score": self.base_score,
            "params": {
                "n_rounds": self.params.n_rounds,
                "learning_rate": self.params.learning_rate,
                "lam": self.params.lam,
                "gamma": self.params.gamma,
                "max_depth": self.params.max_depth,
                "max_leaves": self.params.max_leaves,
            },
            "trees": [t.to_json_dict() for t in self.trees],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "GbdtModel":
        return cls(base_score=float(doc["base_score"]),
                   trees=tuple(TreeNode.from_json_dict(t) for t in doc["trees"]),
                   params=GbdtParams(**doc["params"]))


def fit(features: FeatureMatrix, labels: LabelVector, params: GbdtParams) -> GbdtModel:
    """Grow n_rounds trees, one per round, on the running logits."""
    if features.n_samples != labels.n_samples:
        raise ValueError("features and labels are misaligned")
    y = labels.labels.astype(float)
    prior = float(np.clip(y.mean(), P_CLAMP, 1.0 - P_CLAMP))
    base = float(np.log(prior / (1.0 - prior)))
    if np.unique(labels.labels).size < 2:
        warnings.warn("single-class training set; fitting a constant model")
        return GbdtModel(base, (), params)

    x = features.values
    margin = np.full(x.shape[0], base)
    trees = []
    for _ in range(params.n_rounds):
        g, h = grad_hess_logloss(margin, y)
        root = _grow_tree(x, g, h, params)
        margin += params.learning_rate * _tree_values(root, x)
        trees.append(root)
    return GbdtModel(base, tuple(trees), params)
