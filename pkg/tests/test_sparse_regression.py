import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone

from bocs_hedge.core import Dataset, all_binary_vectors
from bocs_hedge.objectives import exhaustive_minimum
from bocs_hedge.sparse_regression import (BOCSSurrogate, CoefficientSample, HorseshoeRegression,
                                          QuadraticFeatures, SingularCovarianceError,
                                          SparsityMask, _cholesky, _draw_beta_dual,
                                          _draw_beta_primal, build_features, generate_mask,
                                          gibbs_fit, horseshoe_gibbs, surrogate_to_objective)


def fm(d, mask=None):
    return QuadraticFeatures(mask).fit(np.zeros((1, d), dtype=np.uint8))


class TestFeatures:
    def test_zero(self):
        np.testing.assert_array_equal(build_features(np.zeros(4, int), fm(4)), [1] + [0] * 10)

    def test_full_d3(self):
        np.testing.assert_array_equal(build_features([1, 0, 1], fm(3)), [1, 1, 0, 1, 0, 1, 0])

    def test_masked_d3(self):
        mask = SparsityMask(3, ((0, 2),))
        np.testing.assert_array_equal(build_features([1, 0, 1], fm(3, mask)), [1, 1, 0, 1, 1])

    def test_names(self):
        names = fm(3, SparsityMask(3, ((1, 2),))).get_feature_names_out()
        assert list(names) == ["1", "x0", "x1", "x2", "x1 x2"]

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            build_features([1, 0], fm(3))
        with pytest.raises(ValueError):
            QuadraticFeatures(SparsityMask.full(4)).fit(np.zeros((2, 3), dtype=np.uint8))

    @given(st.integers(1, 9), st.floats(0, 1), st.integers(0, 2**31))
    def test_length_equals_p(self, d, s, seed):
        mask = generate_mask(d, s, seed)
        f = fm(d, mask)
        assert f.n_output_features_ == 1 + d + mask.n_pairs
        x = np.random.default_rng(seed).integers(0, 2, d)
        assert build_features(x, f).shape == (f.n_output_features_,)

    def test_full_p(self):
        assert fm(50).n_output_features_ == 1 + 50 + 1225


class TestMask:
    def test_full_and_empty(self):
        assert generate_mask(6, 1.0, 0).n_pairs == 15
        assert generate_mask(6, 1.0, 0).retained_pairs == SparsityMask.full(6).retained_pairs
        assert generate_mask(6, 0.0, 0).n_pairs == 0

    def test_count_rule(self):
        assert generate_mask(50, 0.9, 3).n_pairs == 1103
        assert generate_mask(5, 0.25, 3).n_pairs == 3  # 2.5 rounds half-up

    def test_invalid(self):
        with pytest.raises(ValueError):
            generate_mask(5, 1.5, 0)
        with pytest.raises(ValueError):
            SparsityMask(3, ((2, 1),))

    @given(st.integers(2, 12), st.floats(0, 1), st.integers(0, 2**31))
    def test_pairs_valid_sorted_unique(self, d, s, seed):
        m = generate_mask(d, s, seed)
        pairs = list(m.retained_pairs)
        assert pairs == sorted(set(pairs))
        assert all(0 <= i < j < d for i, j in pairs)
        assert m == generate_mask(d, s, seed)


class TestSamplers:
    def _moments(self, n, p, seed=0, draws=20000):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((n, p))
        y = rng.standard_normal(n)
        prior_var = rng.uniform(0.2, 2.0, p)
        sigma2 = 0.7
        A = X.T @ X + np.diag(1 / prior_var)
        Ainv = np.linalg.inv(A)
        return X, y, prior_var, sigma2, Ainv @ X.T @ y, sigma2 * Ainv

    @pytest.mark.parametrize("sampler", ["primal", "dual"])
    @pytest.mark.parametrize("shape", [(12, 5), (4, 9)])
    def test_conditional_moments(self, sampler, shape):
        X, y, pv, s2, mean, cov = self._moments(*shape)
        rng = np.random.default_rng(1)
        if sampler == "primal":
            B = np.array([_draw_beta_primal(X.T @ X, X.T @ y, s2, pv, rng) for _ in range(20000)])
        else:
            B = np.array([_draw_beta_dual(X, y, s2, pv, rng) for _ in range(20000)])
        se = np.sqrt(np.diag(cov) / len(B))
        assert np.all(np.abs(B.mean(0) - mean) < 5 * se)
        np.testing.assert_allclose(np.cov(B.T), cov, atol=0.05 * np.abs(cov).max())

    def test_cholesky_regularizes_then_errors(self):
        near = np.array([[1.0, 1.0], [1.0, 1.0]])
        L = _cholesky(near)
        np.testing.assert_allclose(L @ L.T, near, atol=1e-9)
        with pytest.raises(SingularCovarianceError):
            _cholesky(np.array([[1.0, 0.0], [0.0, -1.0]]))

    def test_gibbs_scales_positive(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((30, 8))
        _, state = horseshoe_gibbs(X, X[:, 0], 50, rng)
        assert np.all(state.lam2 > 0) and state.tau2 > 0 and state.sigma2 > 0
        assert np.all(np.isfinite(state.lam2))


def planted(d=10, seed=0, n=300):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, (n, d)).astype(np.uint8)
    F = QuadraticFeatures(include_bias=False).fit_transform(X)
    coef = np.zeros(F.shape[1])
    support = rng.choice(F.shape[1], 5, replace=False)
    coef[support] = rng.choice([-1, 1], 5) * rng.uniform(1, 3, 5)
    return X, F, F @ coef, coef


class TestHorseshoeRegression:
    def test_deterministic(self):
        X, F, y, _ = planted(n=60)
        a = HorseshoeRegression(30, random_state=4).fit(F, y)
        b = HorseshoeRegression(30, random_state=4).fit(F, y)
        np.testing.assert_array_equal(a.coef_sample_, b.coef_sample_)

    def test_sklearn_api(self):
        est = HorseshoeRegression(n_sweeps=20, n_keep=5, random_state=0)
        assert clone(est).get_params() == est.get_params()
        X, F, y, _ = planted(n=80)
        est.fit(F, y)
        assert est.coef_samples_.shape == (5, F.shape[1])
        np.testing.assert_allclose(est.coef_, est.coef_samples_.mean(0))
        assert est.predict(F).shape == (80,)
        with pytest.raises(ValueError):
            est.predict(F[:, :3])
        with pytest.raises(ValueError):
            HorseshoeRegression(n_sweeps=3, n_keep=5).fit(F, y)

    def test_recovery_and_shrinkage(self):
        X, F, y, coef = planted(seed=3)
        est = HorseshoeRegression(n_sweeps=150, n_keep=50, random_state=0).fit(F, y)
        rmse = np.sqrt(np.mean((est.predict(F) - y) ** 2))
        assert rmse <= 0.05 * y.std()
        mags = np.abs(est.coef_samples_).mean(0)
        assert mags[coef == 0].mean() < mags[coef != 0].mean()

    def test_constant_response(self):
        F = np.random.default_rng(0).integers(0, 2, (20, 4)).astype(float)
        est = HorseshoeRegression(20, random_state=0).fit(F, np.full(20, 3.0))
        np.testing.assert_allclose(est.predict(F), 3.0, atol=1e-6)


class TestSurrogate:
    def _ds(self, d=5, n=12, seed=0):
        rng = np.random.default_rng(seed)
        X = all_binary_vectors(d)[rng.choice(2**d, n, replace=False)]
        return Dataset.from_arrays(X, rng.standard_normal(n))

    def test_gibbs_fit_deterministic(self):
        ds = self._ds()
        a = gibbs_fit(ds, None, 40, 7)
        b = gibbs_fit(ds, None, 40, 7)
        np.testing.assert_array_equal(a.vector(), b.vector())

    def test_masked_pair_absent(self):
        ds = self._ds()
        mask = SparsityMask(5, ((0, 1), (2, 4)))
        c = gibbs_fit(ds, fm(5, mask), 20, 0)
        assert c.quadratic.shape == (2,)
        Q = c.quadratic_matrix()
        assert np.count_nonzero(Q) <= 2 and Q[0, 2] == 0 and Q[1, 3] == 0

    def test_zero_surrogate(self):
        c = CoefficientSample(0.0, np.zeros(4), np.zeros(6), SparsityMask.full(4).pair_array())
        obj = surrogate_to_objective(c)
        assert all(obj.evaluate(x) == 0 for x in all_binary_vectors(4))

    def test_gibbs_fit_empty(self):
        with pytest.raises(ValueError):
            gibbs_fit(Dataset(3), None, 5, 0)

    @given(st.integers(2, 8), st.floats(0, 1), st.integers(0, 2**31))
    def test_objective_matches_expanded_polynomial(self, d, s, seed):
        mask = generate_mask(d, s, seed)
        rng = np.random.default_rng(seed)
        c = CoefficientSample(rng.standard_normal(), rng.standard_normal(d),
                              rng.standard_normal(mask.n_pairs), mask.pair_array())
        obj = surrogate_to_objective(c, fm(d, mask))
        V = all_binary_vectors(d)
        expanded = fm(d, mask).transform(V) @ c.vector()
        np.testing.assert_allclose(obj.evaluate_batch(V), expanded, atol=1e-10)
        x, v = exhaustive_minimum(obj)
        assert v == pytest.approx(expanded.min(), abs=1e-10)
        np.testing.assert_array_equal(x, V[int(np.argmin(expanded))])

    def test_surrogate_predict_matches_objective(self):
        ds = self._ds(d=6, n=25)
        s = BOCSSurrogate(SparsityMask(6, ((0, 5), (1, 2))), n_sweeps=30, random_state=1).fit(
            ds.X, ds.y)
        V = all_binary_vectors(6)
        np.testing.assert_allclose(s.predict(V), s.to_objective().evaluate_batch(V), atol=1e-10)
