import json

import numpy as np
import pytest

from vultureboost.dataset import FeatureMatrix
from vultureboost.pca import (PcaModel, fit_pca, inverse_transform,
                              select_components, transform)


def _matrix(values):
    v = np.asarray(values, dtype=float)
    return FeatureMatrix(v, tuple(f"f{i}" for i in range(v.shape[1])))


def _fake_model(ratios):
    k = len(ratios)
    return PcaModel(mean=np.zeros(k), components=np.eye(k),
                    explained_variance=np.asarray(ratios, dtype=float),
                    explained_ratio=np.asarray(ratios, dtype=float),
                    feature_names=tuple(f"f{i}" for i in range(k)))


class TestFit:
    def test_collinear_first_ratio_one(self):
        model = fit_pca(_matrix([[1, 1], [2, 2], [3, 3]]))
        assert model.explained_ratio[0] == pytest.approx(1.0, abs=1e-12)
        assert model.n_components == 2

    def test_isotropic_ratios_half(self):
        # oracle: identity covariance has equal eigenvalues, so each of the
        # two components should explain about half the variance
        rng = np.random.default_rng(0)
        model = fit_pca(_matrix(rng.normal(size=(20000, 2))))
        np.testing.assert_allclose(model.explained_ratio, [0.5, 0.5], atol=0.02)

    def test_refit_bit_identical(self):
        rng = np.random.default_rng(1)
        m = _matrix(rng.normal(size=(50, 7)))
        a, b = fit_pca(m), fit_pca(m)
        assert np.array_equal(a.components, b.components)
        assert np.array_equal(a.mean, b.mean)
        assert np.array_equal(a.explained_variance, b.explained_variance)

    def test_sign_convention(self):
        rng = np.random.default_rng(2)
        model = fit_pca(_matrix(rng.normal(size=(30, 5))))
        for row in model.components:
            assert row[np.argmax(np.abs(row))] > 0

    def test_orthonormal_components(self):
        rng = np.random.default_rng(3)
        model = fit_pca(_matrix(rng.normal(size=(40, 6))))
        gram = model.components @ model.components.T
        np.testing.assert_allclose(gram, np.eye(model.n_components), atol=1e-8)

    def test_too_few_samples(self):
        with pytest.raises(ValueError, match="at least 2"):
            fit_pca(_matrix([[1, 2]]))

    def test_component_count_capped_by_samples(self):
        rng = np.random.default_rng(4)
        model = fit_pca(_matrix(rng.normal(size=(4, 10))))
        assert model.n_components == 3

    def test_ratios_sum_to_one(self):
        rng = np.random.default_rng(5)
        model = fit_pca(_matrix(rng.normal(size=(25, 4))))
        assert model.explained_ratio.sum() == pytest.approx(1.0, abs=1e-9)

    def test_variance_nonincreasing(self):
        rng = np.random.default_rng(6)
        model = fit_pca(_matrix(rng.normal(size=(60, 8)) * [1, 2, 3, 4, 5, 6, 7, 8]))
        assert (np.diff(model.explained_variance) <= 1e-12).all()


class TestSelect:
    def test_cumulative_sum(self):
        assert select_components(_fake_model([0.6, 0.3, 0.1]), 0.9) == 2

    def test_target_one_takes_all(self):
        assert select_components(_fake_model([0.6, 0.3, 0.1]), 1.0) == 3

    def test_target_one_on_real_fit(self):
        rng = np.random.default_rng(7)
        model = fit_pca(_matrix(rng.normal(size=(30, 5))))
        assert select_components(model, 1.0) == model.n_components

    def test_ratio_out_of_range(self):
        model = _fake_model([1.0])
        for bad in (0.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                select_components(model, bad)

    def test_monotone_in_target(self):
        rng = np.random.default_rng(8)
        for trial in range(10):
            raw = np.sort(rng.uniform(0.05, 1.0, size=6))[::-1]
            model = _fake_model(raw / raw.sum())
            targets = np.sort(rng.uniform(0.01, 1.0, size=8))
            ks = [select_components(model, t) for t in targets]
            assert all(a <= b for a, b in zip(ks, ks[1:]))


class TestTransform:
    def test_mean_row_maps_to_zero(self):
        rng = np.random.default_rng(9)
        m = _matrix(rng.normal(size=(20, 4)))
        model = fit_pca(m)
        z = transform(model, FeatureMatrix(model.mean[None, :], m.feature_names),
                      model.n_components)
        np.testing.assert_allclose(z.values, 0.0, atol=1e-12)

    def test_collinear_projection(self):
        # hand oracle: centered points (-1,-1),(0,0),(1,1) projected on the
        # unit diagonal give -sqrt(2), 0, sqrt(2)
        model = fit_pca(_matrix([[1, 1], [2, 2], [3, 3]]))
        z = transform(model, _matrix([[1, 1], [2, 2], [3, 3]]), 1)
        np.testing.assert_allclose(z.values[:, 0],
                                   [-np.sqrt(2), 0.0, np.sqrt(2)], atol=1e-12)

    def test_full_rank_round_trip(self):
        rng = np.random.default_rng(10)
        m = _matrix(rng.normal(size=(30, 6)))
        model = fit_pca(m)
        z = transform(model, m, model.n_components)
        back = inverse_transform(model, z)
        assert np.abs(back.values - m.values).max() < 1e-8

    def test_dimension_mismatch(self):
        model = fit_pca(_matrix(np.eye(3)))
        with pytest.raises(ValueError):
            transform(model, _matrix(np.ones((2, 5))), 1)
        with pytest.raises(ValueError):
            transform(model, _matrix(np.eye(3)), 99)

    def test_projected_covariance_diagonal(self):
        rng = np.random.default_rng(11)
        m = _matrix(rng.normal(size=(200, 8)) @ rng.normal(size=(8, 8)))
        model = fit_pca(m)
        z = transform(model, m, model.n_components).values
        cov = np.cov(z, rowvar=False)
        off = cov - np.diag(np.diag(cov))
        assert np.abs(off).max() <= 1e-6 * np.abs(np.diag(cov)).max()

    def test_projected_variance_matches_model(self):
        rng = np.random.default_rng(12)
        m = _matrix(rng.normal(size=(100, 5)) * [5, 4, 3, 2, 1])
        model = fit_pca(m)
        z = transform(model, m, model.n_components).values
        np.testing.assert_allclose(z.var(axis=0, ddof=1), model.explained_variance,
                                   rtol=1e-6)


class TestInverse:
    def test_zero_row_gives_mean(self):
        rng = np.random.default_rng(13)
        m = _matrix(rng.normal(size=(15, 4)))
        model = fit_pca(m)
        back = inverse_transform(model, FeatureMatrix(np.zeros((1, 2)), ("pc1", "pc2")))
        np.testing.assert_allclose(back.values[0], model.mean, atol=1e-12)

    def test_reduced_rank_error_equals_discarded_variance(self):
        # identity oracle: the mean squared residual of a rank-k
        # reconstruction equals (sum of discarded variances) * (n-1)/n
        rng = np.random.default_rng(14)
        n = 120
        m = _matrix(rng.normal(size=(n, 6)) * [6, 5, 4, 3, 2, 1])
        model = fit_pca(m)
        for k in (1, 2, 4):
            z = transform(model, m, k)
            back = inverse_transform(model, z)
            residual = ((back.values - m.values) ** 2).sum(axis=1).mean()
            oracle = model.explained_variance[k:].sum() * (n - 1) / n
            assert residual == pytest.approx(oracle, rel=1e-8)

    def test_too_many_projected_features(self):
        model = fit_pca(_matrix(np.eye(3)))
        with pytest.raises(ValueError):
            inverse_transform(model, _matrix(np.ones((1, 5))))


def test_json_round_trip():
    rng = np.random.default_rng(15)
    m = _matrix(rng.normal(size=(20, 3)))
    model = fit_pca(m)
    doc = json.loads(json.dumps(model.to_json_dict()))
    restored = PcaModel.from_json_dict(doc)
    z1 = transform(model, m, 2)
    z2 = transform(restored, m, 2)
    np.testing.assert_allclose(z1.values, z2.values, atol=0, rtol=0)
