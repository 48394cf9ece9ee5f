"""Quadratic binary features and horseshoe-prior Bayesian linear regression.

:class:`BOCSSurrogate` fits ``f(x) ~ a0 + sum_i a_i x_i + sum_{(i,j) in mask} a_ij x_i x_j``
by Gibbs sampling and exports a single posterior draw as a
:class:`~bocs_hedge.objectives.QuadraticObjective` to be minimized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted, check_X_y, validate_data

from .core import Dataset, as_binary_matrix, check_random_state
from .objectives import QuadraticObjective

_SCALE_MIN = 1e-100
_SCALE_MAX = 1e100


class SingularCovarianceError(np.linalg.LinAlgError):
    """The Gaussian conditional of the coefficients could not be factorized."""


@dataclass(frozen=True)
class SparsityMask:
    """Retained off-diagonal pairs (i<j, 0-based). Linear terms are always kept."""

    d: int
    retained_pairs: tuple
    seed: int | None = None

    def __post_init__(self):
        for i, j in self.retained_pairs:
            if not (0 <= i < j < self.d):
                raise ValueError(f"invalid pair {(i, j)} for d={self.d}")

    @classmethod
    def full(cls, d: int) -> "SparsityMask":
        i, j = np.triu_indices(d, 1)
        return cls(d, tuple(zip(i.tolist(), j.tolist())))

    @property
    def n_pairs(self) -> int:
        return len(self.retained_pairs)

    @property
    def sparsity(self) -> float:
        total = self.d * (self.d - 1) // 2
        return 1.0 if total == 0 else self.n_pairs / total

    def pair_array(self) -> np.ndarray:
        return np.array(self.retained_pairs, dtype=np.int64).reshape(-1, 2)

    def to_dict(self) -> dict:
        return {"d": self.d, "sparsity": self.sparsity, "seed": self.seed,
                "retained_pairs": [list(p) for p in self.retained_pairs]}


def generate_mask(d: int, sparsity: float, seed: int) -> SparsityMask:
    """Keep ``round_half_up(sparsity * C(d,2))`` pairs chosen uniformly without replacement."""
    if not 0.0 <= sparsity <= 1.0:
        raise ValueError("sparsity must lie in [0, 1]")
    total = d * (d - 1) // 2
    n_keep = int(np.floor(sparsity * total + 0.5))
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(total, size=n_keep, replace=False))
    i, j = np.triu_indices(d, 1)
    return SparsityMask(d, tuple(zip(i[chosen].tolist(), j[chosen].tolist())), seed)


class QuadraticFeatures(TransformerMixin, BaseEstimator):
    """Map binary rows to ``[1, x_1..x_d, x_i x_j for retained (i, j)]``.

    Parameters
    ----------
    mask : SparsityMask or None
        Off-diagonal pairs to keep; ``None`` keeps all C(d,2) pairs in
        row-major (i<j) order.
    include_bias : bool
        Prepend the constant column.
    """

    def __init__(self, mask: SparsityMask | None = None, include_bias: bool = True):
        self.mask = mask
        self.include_bias = include_bias

    def fit(self, X, y=None):
        X = as_binary_matrix(X)
        d = X.shape[1]
        mask = self.mask if self.mask is not None else SparsityMask.full(d)
        if mask.d != d:
            raise ValueError(f"mask dimension {mask.d} != data dimension {d}")
        self.n_features_in_ = d
        self.pairs_ = mask.pair_array()
        self.n_output_features_ = int(self.include_bias) + d + len(self.pairs_)
        return self

    def transform(self, X):
        check_is_fitted(self, "pairs_")
        X = as_binary_matrix(X, self.n_features_in_).astype(float)
        cols = [X, X[:, self.pairs_[:, 0]] * X[:, self.pairs_[:, 1]]]
        if self.include_bias:
            cols.insert(0, np.ones((X.shape[0], 1)))
        return np.hstack(cols)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "pairs_")
        names = ["1"] if self.include_bias else []
        names += [f"x{i}" for i in range(self.n_features_in_)]
        names += [f"x{i} x{j}" for i, j in self.pairs_]
        return np.array(names, dtype=object)


def build_features(x, fm: QuadraticFeatures) -> np.ndarray:
    return fm.transform(np.asarray(x)[None, :])[0]


@dataclass
class HorseshoeState:
    """Scales of the horseshoe hierarchy (local ``lam2``, global ``tau2``, noise ``sigma2``)."""

    lam2: np.ndarray
    tau2: float
    sigma2: float
    nu: np.ndarray
    xi: float

    @classmethod
    def initial(cls, p: int) -> "HorseshoeState":
        return cls(np.ones(p), 1.0, 1.0, np.ones(p), 1.0)


def _inv_gamma(rng, shape, scale):
    return scale / rng.gamma(shape, 1.0, size=np.shape(scale) or None)


def _cholesky(M: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.cholesky(M + 1e-10 * np.eye(M.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise SingularCovarianceError("coefficient conditional covariance is singular") from exc


def _draw_beta_primal(XtX, Xty, sigma2, prior_var, rng):
    # A = X'X + diag(1/prior_var) written as S^-1 (S X'X S + I) S^-1, S = sqrt(prior_var)
    s = np.sqrt(prior_var)
    M = s[:, None] * XtX * s[None, :]
    M[np.diag_indices_from(M)] += 1.0
    L = _cholesky(M)
    mean = s * scipy.linalg.cho_solve((L, True), s * Xty)
    z = rng.standard_normal(len(s))
    return mean + np.sqrt(sigma2) * s * scipy.linalg.solve_triangular(L, z, lower=True, trans="T")


def _draw_beta_dual(X, y, sigma2, prior_var, rng):
    # exact draw through an n x n system when n < p
    n, p = X.shape
    sigma = np.sqrt(sigma2)
    D = sigma2 * prior_var
    u = np.sqrt(D) * rng.standard_normal(p)
    delta = rng.standard_normal(n)
    v = X @ u / sigma + delta
    M = (X * prior_var) @ X.T
    M[np.diag_indices_from(M)] += 1.0
    L = _cholesky(M)
    w = scipy.linalg.cho_solve((L, True), y / sigma - v)
    return u + D * (X.T @ w) / sigma


def horseshoe_gibbs(X, y, n_sweeps: int, rng, n_keep: int = 1, state: HorseshoeState | None = None):
    """Run the horseshoe Gibbs chain on (already centered) ``X``, ``y``.

    Returns ``(samples, state)`` where ``samples`` holds the last ``n_keep``
    coefficient draws, shape (n_keep, p).
    """
    n, p = X.shape
    state = state or HorseshoeState.initial(p)
    lam2, tau2, sigma2, nu, xi = state.lam2, state.tau2, state.sigma2, state.nu, state.xi
    primal = n >= p
    if primal:
        XtX = X.T @ X
        Xty = X.T @ y
    samples = []
    for sweep in range(n_sweeps):
        prior_var = np.clip(tau2 * lam2, _SCALE_MIN, _SCALE_MAX)
        if primal:
            beta = _draw_beta_primal(XtX, Xty, sigma2, prior_var, rng)
        else:
            beta = _draw_beta_dual(X, y, sigma2, prior_var, rng)
        resid = y - X @ beta
        b2 = beta * beta
        sigma2 = _inv_gamma(rng, 0.5 * (n + p), 0.5 * (resid @ resid + np.sum(b2 / prior_var)))
        sigma2 = float(np.clip(sigma2, _SCALE_MIN, _SCALE_MAX))
        lam2 = np.clip(_inv_gamma(rng, 1.0, 1.0 / nu + b2 / (2.0 * tau2 * sigma2)),
                       _SCALE_MIN, _SCALE_MAX)
        tau2 = _inv_gamma(rng, 0.5 * (p + 1), 1.0 / xi + np.sum(b2 / lam2) / (2.0 * sigma2))
        tau2 = float(np.clip(tau2, _SCALE_MIN, _SCALE_MAX))
        nu = _inv_gamma(rng, 1.0, 1.0 + 1.0 / lam2)
        xi = float(_inv_gamma(rng, 1.0, 1.0 + 1.0 / tau2))
        if sweep >= n_sweeps - n_keep:
            samples.append(beta)
    return np.array(samples), HorseshoeState(lam2, tau2, sigma2, nu, xi)


class HorseshoeRegression(RegressorMixin, BaseEstimator):
    """Bayesian linear regression with a horseshoe prior, fit by Gibbs sampling.

    The response is standardized and the feature columns centered before
    sampling; the intercept is recovered afterwards and is not shrunk.

    Parameters
    ----------
    n_sweeps : int
        Length of the chain.
    n_keep : int
        Number of final draws retained in ``coef_samples_``.
    random_state : int, Generator or None

    Attributes
    ----------
    coef_sample_, intercept_sample_ : final posterior draw
    coef_samples_, intercept_samples_ : the last ``n_keep`` draws
    coef_, intercept_ : mean of the retained draws
    state_ : HorseshoeState at the end of the chain
    """

    def __init__(self, n_sweeps: int = 200, n_keep: int = 1, random_state=None):
        self.n_sweeps = n_sweeps
        self.n_keep = n_keep
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        if self.n_sweeps < 1 or not 1 <= self.n_keep <= self.n_sweeps:
            raise ValueError("need n_sweeps >= 1 and 1 <= n_keep <= n_sweeps")
        self.n_features_in_ = X.shape[1]
        rng = check_random_state(self.random_state)
        x_mean = X.mean(axis=0)
        y_mean = float(y.mean())
        y_scale = float(y.std())
        if not y_scale > 0:
            y_scale = 1.0
        Xc = X - x_mean
        yc = (y - y_mean) / y_scale
        draws, self.state_ = horseshoe_gibbs(Xc, yc, self.n_sweeps, rng, self.n_keep)
        self.coef_samples_ = draws * y_scale
        self.intercept_samples_ = y_mean - self.coef_samples_ @ x_mean
        self.coef_sample_ = self.coef_samples_[-1]
        self.intercept_sample_ = float(self.intercept_samples_[-1])
        self.coef_ = self.coef_samples_.mean(axis=0)
        self.intercept_ = float(self.intercept_samples_.mean())
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False, dtype=np.float64)
        return X @ self.coef_ + self.intercept_


@dataclass
class CoefficientSample:
    """One draw of the surrogate coefficients; ``pairs`` lists the retained (i, j)."""

    intercept: float
    linear: np.ndarray
    quadratic: np.ndarray
    pairs: np.ndarray

    @property
    def d(self) -> int:
        return self.linear.size

    def vector(self) -> np.ndarray:
        """Coefficients aligned with ``QuadraticFeatures(include_bias=True)`` output."""
        return np.concatenate([[self.intercept], self.linear, self.quadratic])

    def quadratic_matrix(self) -> np.ndarray:
        Q = np.zeros((self.d, self.d))
        if len(self.pairs):
            Q[self.pairs[:, 0], self.pairs[:, 1]] = self.quadratic
        return Q


def surrogate_to_objective(c: CoefficientSample, fm=None) -> QuadraticObjective:
    return QuadraticObjective(c.linear, c.quadratic_matrix(), c.intercept)


class BOCSSurrogate(RegressorMixin, BaseEstimator):
    """Sparse quadratic surrogate over binary inputs with a horseshoe prior.

    ``fit`` draws one posterior sample (the last of ``n_sweeps`` sweeps);
    ``predict`` and ``to_objective`` use that sample.
    """

    def __init__(self, mask: SparsityMask | None = None, n_sweeps: int = 200, n_keep: int = 1,
                 random_state=None):
        self.mask = mask
        self.n_sweeps = n_sweeps
        self.n_keep = n_keep
        self.random_state = random_state

    def fit(self, X, y):
        X = as_binary_matrix(X)
        y = np.asarray(y, dtype=float)
        self.features_ = QuadraticFeatures(self.mask, include_bias=False).fit(X)
        F = self.features_.transform(X)
        self.regression_ = HorseshoeRegression(self.n_sweeps, self.n_keep,
                                               self.random_state).fit(F, y)
        self.n_features_in_ = X.shape[1]
        d = X.shape[1]
        coef = self.regression_.coef_sample_
        self.coef_sample_ = CoefficientSample(self.regression_.intercept_sample_, coef[:d].copy(),
                                              coef[d:].copy(), self.features_.pairs_)
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_sample_")
        F = self.features_.transform(as_binary_matrix(X, self.n_features_in_))
        return F @ np.concatenate([self.coef_sample_.linear, self.coef_sample_.quadratic]) \
            + self.coef_sample_.intercept

    def to_objective(self) -> QuadraticObjective:
        check_is_fitted(self, "coef_sample_")
        return surrogate_to_objective(self.coef_sample_)


def gibbs_fit(ds: Dataset, fm: QuadraticFeatures | SparsityMask | None, n_sweeps: int = 200,
              rng=None) -> CoefficientSample:
    """One posterior coefficient draw for the data in ``ds``."""
    if len(ds) == 0:
        raise ValueError("cannot fit a surrogate to an empty dataset")
    mask = fm.mask if isinstance(fm, QuadraticFeatures) else fm
    return BOCSSurrogate(mask, n_sweeps, random_state=rng).fit(ds.X, ds.y).coef_sample_
