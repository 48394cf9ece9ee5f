"""Gaussian process regression on binary vectors with the Hamming kernel
``k(x, x') = exp(-gamma * d_H(x, x'))``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numba
import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .core import Dataset, as_binary_matrix, as_binary_vector, hamming_distance, pairwise_hamming
from .objectives import PseudoBooleanObjective, TabulatedObjective, table_points

JITTER_FLOOR = 1e-8
JITTER_CEIL = 1e-2
VARIANCE_TOL = 1e-9


class GPFactorizationError(np.linalg.LinAlgError):
    """Kernel matrix stayed non positive definite after jitter escalation."""


def kernel_value(a, b, gamma: float) -> float:
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return float(np.exp(-gamma * hamming_distance(a, b)))


def hamming_kernel(A, B, gamma: float) -> np.ndarray:
    """Kernel matrix between the rows of ``A`` and ``B``."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return np.exp(-gamma * pairwise_hamming(A, B))


@dataclass(frozen=True)
class GammaGrid:
    values: tuple

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size == 0 or np.any(v <= 0) or np.any(np.diff(v) <= 0):
            raise ValueError("gamma grid must be nonempty, positive and strictly increasing")

    @classmethod
    def logspace(cls, low: float = 1e-3, high: float = 10**0.5, num: int = 15) -> "GammaGrid":
        return cls(tuple(np.logspace(np.log10(low), np.log10(high), num).tolist()))


DEFAULT_GRID = GammaGrid.logspace()


def factorize(K: np.ndarray, jitter: float = 0.0):
    """Cholesky factor of ``K + jitter*I`` with jitter escalation.

    On failure the jitter becomes ``max(10*jitter, 1e-8*mean(diag K))`` and the
    factorization is retried, up to ``1e-2*mean(diag K)``. Returns ``(L, jitter)``.
    """
    if jitter < 0:
        raise ValueError("jitter must be nonnegative")
    scale = float(np.mean(np.diag(K)))
    n = K.shape[0]
    j = float(jitter)
    while True:
        try:
            return np.linalg.cholesky(K + j * np.eye(n)), j
        except np.linalg.LinAlgError:
            if j >= JITTER_CEIL * scale:
                raise GPFactorizationError(
                    f"kernel matrix not positive definite with jitter {j:.1e}") from None
            j = min(max(10.0 * j, JITTER_FLOOR * scale), JITTER_CEIL * scale)


def _canonical(X: np.ndarray, y: np.ndarray):
    """Rows sorted lexicographically, so results do not depend on dataset order."""
    order = np.lexsort(X.T[::-1])
    return X[order], y[order]


def _lml_from_factor(L: np.ndarray, yc: np.ndarray) -> float:
    alpha = scipy.linalg.cho_solve((L, True), yc)
    t = yc.size
    return float(-0.5 * yc @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * t * np.log(2 * np.pi))


def _select(D: np.ndarray, yc: np.ndarray, grid: GammaGrid, jitter: float):
    values = np.unique(np.asarray(grid.values, dtype=float))
    scores = []
    for g in values:
        L, _ = factorize(np.exp(-g * D), jitter)
        scores.append(_lml_from_factor(L, yc))
    # argmax returns the first maximum, i.e. the smallest gamma on ties
    return float(values[int(np.argmax(scores))]), np.array(scores)


class HammingGP(RegressorMixin, BaseEstimator):
    """GP regressor for binary inputs with a unit-amplitude Hamming kernel.

    The prior mean is the sample mean of the training targets (stored as
    ``y_offset_``); only the centered targets are modeled by the kernel.
    Training rows are stored sorted (``X_train_``), which makes every fitted
    quantity independent of the order of the data.

    Parameters
    ----------
    gamma : float or None
        Kernel decay rate. ``None`` selects it from ``gamma_grid`` by
        maximizing the log marginal likelihood.
    gamma_grid : GammaGrid or None
        Candidates for ``gamma=None``; defaults to 15 log-spaced values in
        [1e-3, 10**0.5].
    jitter : float
        Diagonal term added to the kernel matrix (escalated if needed).
    table_max_dim : int
        Largest dimension for which LCB objectives are tabulated over all 2^d points.
    """

    def __init__(self, gamma: float | None = None, gamma_grid: GammaGrid | None = None,
                 jitter: float = JITTER_FLOOR, table_max_dim: int = 16):
        self.gamma = gamma
        self.gamma_grid = gamma_grid
        self.jitter = jitter
        self.table_max_dim = table_max_dim

    def fit(self, X, y):
        X = as_binary_matrix(X)
        y = np.asarray(y, dtype=float)
        if X.shape[0] == 0 or y.shape != (X.shape[0],):
            raise ValueError("X and y must be nonempty with matching lengths")
        if self.jitter < 0:
            raise ValueError("jitter must be nonnegative")
        X, y = _canonical(X, y)
        self.X_train_ = X
        self.n_features_in_ = X.shape[1]
        self.y_offset_ = float(y.mean())
        self.y_train_ = y - self.y_offset_
        D = pairwise_hamming(X, X)
        if self.gamma is None:
            self.gamma_, self.lml_grid_ = _select(D, self.y_train_, self.gamma_grid or DEFAULT_GRID,
                                                  self.jitter)
        else:
            if not self.gamma > 0:
                raise ValueError("gamma must be positive")
            self.gamma_ = float(self.gamma)
        self.K_ = np.exp(-self.gamma_ * D)
        self.L_, self.jitter_ = factorize(self.K_, self.jitter)
        self.alpha_ = scipy.linalg.cho_solve((self.L_, True), self.y_train_)
        self._table = None
        return self

    def _cross_kernel(self, X):
        D = pairwise_hamming(X, self.X_train_)
        decay = np.exp(-self.gamma_ * np.arange(self.n_features_in_ + 1))
        return decay[D]

    def predict(self, X, return_std: bool = False, return_var: bool = False):
        check_is_fitted(self, "alpha_")
        X = as_binary_matrix(X, self.n_features_in_)
        Ks = self._cross_kernel(X)
        mu = self.y_offset_ + Ks @ self.alpha_
        if not (return_std or return_var):
            return mu
        V = scipy.linalg.solve_triangular(self.L_, Ks.T, lower=True)
        var = 1.0 - np.einsum("ij,ij->j", V, V)
        if var.min() < -VARIANCE_TOL:
            warnings.warn(f"predictive variance {var.min():.3e} below -{VARIANCE_TOL:g}; "
                          "kernel matrix is badly conditioned", RuntimeWarning, stacklevel=2)
        var = np.clip(var, 0.0, 1.0)
        return (mu, var) if return_var else (mu, np.sqrt(var))

    def log_marginal_likelihood(self, gamma: float | None = None) -> float:
        check_is_fitted(self, "alpha_")
        if gamma is None:
            return _lml_from_factor(self.L_, self.y_train_)
        L, _ = factorize(hamming_kernel(self.X_train_, self.X_train_, gamma), self.jitter)
        return _lml_from_factor(L, self.y_train_)

    def tabulate(self, chunk: int = 8192):
        """Predictive mean and standard deviation at every point, in table order."""
        check_is_fitted(self, "alpha_")
        if self._table is None:
            pts = table_points(self.n_features_in_)
            mus, sds = [], []
            for start in range(0, len(pts), chunk):
                mu, sd = self.predict(pts[start:start + chunk], return_std=True)
                mus.append(mu)
                sds.append(sd)
            self._table = (np.concatenate(mus), np.concatenate(sds))
        return self._table

    def lcb_objective(self, kappa: float) -> PseudoBooleanObjective:
        """``mu(x) - kappa * sigma(x)`` as a minimizable objective."""
        if not kappa > 0:
            raise ValueError("kappa must be positive")
        if self.n_features_in_ <= self.table_max_dim:
            mu, sd = self.tabulate()
            return TabulatedObjective(mu - kappa * sd)
        return LCBObjective(self, kappa)


class LCBObjective(PseudoBooleanObjective):
    """Lower confidence bound of a fitted :class:`HammingGP`, evaluated on demand."""

    def __init__(self, gp: HammingGP, kappa: float):
        check_is_fitted(gp, "alpha_")
        self.gp = gp
        self.kappa = float(kappa)
        self.d = gp.n_features_in_
        self._Kinv = None

    def evaluate(self, x) -> float:
        return float(self.evaluate_batch(np.asarray(x)[None, :])[0])

    def evaluate_batch(self, X) -> np.ndarray:
        mu, sd = self.gp.predict(X, return_std=True)
        return mu - self.kappa * sd

    def _anneal_fast(self, x0, flips, uniforms, temps):
        gp = self.gp
        if self._Kinv is None:
            Linv = scipy.linalg.solve_triangular(gp.L_, np.eye(gp.L_.shape[0]), lower=True)
            self._Kinv = Linv.T @ Linv
        decay = np.exp(-gp.gamma_ * np.arange(self.d + 2))
        return _sa_lcb(gp.X_train_.astype(np.int64), gp.alpha_, self._Kinv, gp.y_offset_, decay,
                       self.kappa, x0.astype(np.int64), flips, uniforms, temps).astype(np.uint8)


@numba.njit(cache=True)
def _lcb_at(dist, alpha, Kinv, offset, decay, kappa, kv):
    n = dist.shape[0]
    mu = offset
    for i in range(n):
        kv[i] = decay[dist[i]]
        mu += kv[i] * alpha[i]
    q = 0.0
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += Kinv[i, j] * kv[j]
        q += kv[i] * acc
    var = 1.0 - q
    if var < 0.0:
        var = 0.0
    return mu - kappa * np.sqrt(var)


@numba.njit(cache=True)
def _sa_lcb(Xtr, alpha, Kinv, offset, decay, kappa, x0, flips, uniforms, temps):
    n, d = Xtr.shape
    x = x0.copy()
    dist = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for j in range(d):
            if x[j] != Xtr[i, j]:
                dist[i] += 1
    kv = np.empty(n)
    new = np.empty(n, dtype=np.int64)
    cur = _lcb_at(dist, alpha, Kinv, offset, decay, kappa, kv)
    best = cur
    best_x = x.copy()
    for s in range(flips.shape[0]):
        T = temps[s]
        for q in range(flips.shape[1]):
            k = flips[s, q]
            for i in range(n):
                new[i] = dist[i] + (1 if x[k] == Xtr[i, k] else -1)
            val = _lcb_at(new, alpha, Kinv, offset, decay, kappa, kv)
            delta = val - cur
            if not np.isfinite(delta):
                raise ValueError("non-finite flip delta")
            if delta <= 0.0 or uniforms[s, q] < np.exp(-delta / T):
                x[k] = 1 - x[k]
                dist[:] = new
                cur = val
                if cur < best:
                    best = cur
                    best_x[:] = x
    return best_x


# -- functional interface ------------------------------------------------------

def fit_posterior(ds: Dataset, gamma: float, jitter: float = 0.0) -> HammingGP:
    if len(ds) == 0:
        raise ValueError("cannot fit a GP to an empty dataset")
    return HammingGP(gamma=gamma, jitter=jitter).fit(ds.X, ds.y)


def predict(post: HammingGP, x) -> tuple[float, float]:
    """``(mu, sigma2)`` at a single point."""
    x = as_binary_vector(x, post.n_features_in_)
    mu, var = post.predict(x[None, :], return_var=True)
    return float(mu[0]), float(var[0])


def log_marginal_likelihood(ds: Dataset, gamma: float, jitter: float = 0.0) -> float:
    """Log marginal likelihood of the centered targets under ``K(gamma) + jitter*I``."""
    if len(ds) == 0:
        raise ValueError("empty dataset")
    X, y = _canonical(ds.X, ds.y)
    L, _ = factorize(hamming_kernel(X, X, gamma), jitter)
    return _lml_from_factor(L, y - y.mean())


def select_gamma(ds: Dataset, grid: GammaGrid = DEFAULT_GRID, jitter: float = 0.0) -> float:
    """Grid value with the largest log marginal likelihood (smallest gamma on ties)."""
    if len(ds) == 0:
        raise ValueError("empty dataset")
    X, y = _canonical(ds.X, ds.y)
    D = pairwise_hamming(X, X)
    return _select(D, y - y.mean(), grid, jitter)[0]
