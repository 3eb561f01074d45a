"""Principal-component basis: fit by SVD, pick components by explained variance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import FeatureMatrix


@dataclass(frozen=True)
class PcaModel:
    """Centering vector, orthonormal component rows, and variance bookkeeping.

    Fitted models are immutable; transform may be called concurrently.
    """

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    explained_ratio: np.ndarray
    feature_names: tuple[str, ...]

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def n_features(self) -> int:
        return self.components.shape[1]

    def to_json_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "explained_ratio": self.explained_ratio.tolist(),
            "feature_names": list(self.feature_names),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "PcaModel":
        return cls(
            mean=np.asarray(doc["mean"], dtype=float),
            components=np.asarray(doc["components"], dtype=float),
            explained_variance=np.asarray(doc["explained_variance"], dtype=float),
            explained_ratio=np.asarray(doc["explained_ratio"], dtype=float),
            feature_names=tuple(doc["feature_names"]),
        )


def fit_pca(m: FeatureMatrix) -> PcaModel:
    """Fit all min(n_samples - 1, n_features) components of the centered data.

    Works on the data matrix directly via SVD (no covariance assembly).
    Each component is flipped so its largest-magnitude coordinate is
    positive, which makes refits bit-identical across runs.
    """
    n = m.n_samples
    if n < 2:
        raise ValueError("PCA requires at least 2 samples")
    mean = m.values.mean(axis=0)
    centered = m.values - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)

    k = min(n - 1, m.n_features)
    variances = s ** 2 / (n - 1)
    total = variances.sum()  # all singular values: exact total data variance
    components = vt[:k].copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    if total <= 0:
        ratios = np.zeros(k)
        ratios[0] = 1.0  # degenerate all-constant data
    else:
        ratios = variances[:k] / total
    return PcaModel(mean, components, variances[:k], ratios, m.feature_names)


def select_components(model: PcaModel, variance_ratio: float) -> int:
    """Smallest k whose cumulative explained ratio reaches the target."""
    if not 0.0 < variance_ratio <= 1.0:
        raise ValueError("variance_ratio must lie in (0, 1]")
    cum = np.cumsum(model.explained_ratio)
    # small slack so a target of 1.0 survives float round-off in the cumsum
    idx = int(np.searchsorted(cum, variance_ratio - 1e-9, side="left"))
    return min(idx + 1, model.n_components)


def transform(model: PcaModel, m: FeatureMatrix, k: int) -> FeatureMatrix:
    """Project centered rows onto the first k components."""
    if not 1 <= k <= model.n_components:
        raise ValueError(f"k={k} outside [1, {model.n_components}]")
    if m.n_features != model.n_features:
        raise ValueError(f"feature-count mismatch: matrix has {m.n_features}, "
                         f"model fitted on {model.n_features}")
    z = (m.values - model.mean) @ model.components[:k].T
    return FeatureMatrix(z, tuple(f"pc{i + 1}" for i in range(k)))


def inverse_transform(model: PcaModel, z: FeatureMatrix) -> FeatureMatrix:
    """Map projected rows back to the original feature space."""
    k = z.n_features
    if k > model.n_components:
        raise ValueError(f"{k} projected features exceed {model.n_components} components")
    v = z.values @ model.components[:k] + model.mean
    return FeatureMatrix(v, model.feature_names)
