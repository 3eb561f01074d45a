import numpy as np
import pytest

from vultureboost.dataset import FeatureMatrix, LabelVector


def make_blobs(n=300, d=20, sep=2.5, seed=0, names=None):
    """Two gaussian clouds, class 0 at the origin and class 1 at sep."""
    rng = np.random.default_rng(seed)
    half = n // 2
    X = np.vstack([rng.normal(0.0, 1.0, (half, d)),
                   rng.normal(sep, 1.0, (n - half, d))])
    y = np.array([0] * half + [1] * (n - half))
    matrix = FeatureMatrix(X, names or tuple(f"f{i}" for i in range(d)))
    labels = LabelVector(y, {0: "neg", 1: "pos"})
    return matrix, labels


def write_table(path, X, classes, feature_names=None, label_column="label"):
    """UTF-8 CSV in the pipeline's expected schema."""
    d = X.shape[1]
    names = feature_names or [f"f{i}" for i in range(d)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(list(names) + [label_column]) + "\n")
        for row, cls in zip(X, classes):
            fh.write(",".join(repr(float(v)) for v in row) + f",{cls}\n")
    return path


@pytest.fixture
def blobs():
    return make_blobs()


@pytest.fixture
def blobs_csv(tmp_path):
    matrix, labels = make_blobs(n=200, d=8, seed=7)
    path = tmp_path / "table.csv"
    write_table(path, matrix.values, labels.decode())
    return path
