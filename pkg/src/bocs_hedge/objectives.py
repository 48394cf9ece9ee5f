"""Pseudo-boolean objectives over {0,1}^d with incremental single-bit-flip deltas.

Every objective exposes ``evaluate``, ``evaluate_batch`` and ``flip_delta``.
Objectives with a compiled annealing kernel also implement ``_anneal_fast``
(used by :mod:`bocs_hedge.annealer`) and ``_exhaustive_fast``.
"""

from __future__ import annotations

from typing import Callable

import numba
import numpy as np

from .core import DimensionMismatchError, all_binary_vectors, as_binary_matrix, as_binary_vector


class PseudoBooleanObjective:
    """Base class. Subclasses implement at least ``evaluate``."""

    d: int

    def __call__(self, x) -> float:
        return self.evaluate(x)

    def evaluate(self, x) -> float:
        raise NotImplementedError

    def evaluate_batch(self, X) -> np.ndarray:
        X = as_binary_matrix(X, self.d)
        return np.array([self.evaluate(x) for x in X], dtype=float)

    def flip_delta(self, x, k: int) -> float:
        x = as_binary_vector(x, self.d)
        y = x.copy()
        y[k] ^= 1
        return self.evaluate(y) - self.evaluate(x)

    def _anneal_fast(self, x0, flips, uniforms, temps):
        """Compiled annealing loop; ``None`` means "use the generic loop"."""
        return None

    def _exhaustive_fast(self):
        return None

    def _check(self, x) -> np.ndarray:
        return as_binary_vector(x, self.d)


class FunctionObjective(PseudoBooleanObjective):
    """Wrap an arbitrary callable ``f(x) -> float`` as an objective."""

    def __init__(self, func: Callable[[np.ndarray], float], d: int):
        self.func = func
        self.d = int(d)

    def evaluate(self, x) -> float:
        return float(self.func(self._check(x)))


# -- quadratic ----------------------------------------------------------------

def _upper(Q: np.ndarray, d: int) -> np.ndarray:
    Q = np.array(Q, dtype=float)
    if Q.shape != (d, d):
        raise DimensionMismatchError(f"quadratic matrix must be ({d}, {d}), got {Q.shape}")
    return np.triu(Q, 1) + np.tril(Q, -1).T


class QuadraticObjective(PseudoBooleanObjective):
    """``c + sum_i a_i x_i + sum_{i<j} Q_ij x_i x_j``.

    ``quadratic`` may be any square matrix; entries below the diagonal are
    folded onto the upper triangle and the diagonal must be zero (use the
    linear vector for diagonal terms since x_i^2 = x_i).
    """

    def __init__(self, linear, quadratic, constant: float = 0.0):
        self.linear = np.array(linear, dtype=float)
        self.d = self.linear.size
        Q = np.array(quadratic, dtype=float)
        if Q.shape == (self.d, self.d) and np.any(np.diag(Q) != 0):
            raise ValueError("quadratic matrix must have a zero diagonal")
        self.quadratic = _upper(Q, self.d)
        self.constant = float(constant)
        self._sym = self.quadratic + self.quadratic.T
        if not (np.all(np.isfinite(self.linear)) and np.all(np.isfinite(self.quadratic))):
            raise ValueError("coefficients must be finite")

    def evaluate(self, x) -> float:
        xf = self._check(x).astype(float)
        return float(self.constant + self.linear @ xf + xf @ self.quadratic @ xf)

    def evaluate_batch(self, X) -> np.ndarray:
        Xf = as_binary_matrix(X, self.d).astype(float)
        return self.constant + Xf @ self.linear + np.einsum("ni,ni->n", Xf @ self.quadratic, Xf)

    def flip_delta(self, x, k: int) -> float:
        x = self._check(x)
        return float((1 - 2 * int(x[k])) * (self.linear[k] + self._sym[k] @ x))

    def _anneal_fast(self, x0, flips, uniforms, temps):
        return _sa_quadratic(self.linear, self._sym, x0.astype(np.float64), flips, uniforms, temps)

    def _exhaustive_fast(self):
        return _exhaustive_quadratic(self.linear, self._sym)


class CubicObjective(PseudoBooleanObjective):
    """Quadratic objective plus ``sum_{i<j<k} C_ijk x_i x_j x_k``.

    ``cubic`` is a dense (d, d, d) array; only strictly increasing index
    triples are read.
    """

    def __init__(self, linear, quadratic, cubic, constant: float = 0.0):
        self._quad = QuadraticObjective(linear, quadratic, constant)
        self.d = self._quad.d
        C = np.array(cubic, dtype=float)
        if C.shape != (self.d,) * 3:
            raise DimensionMismatchError(f"cubic tensor must be {(self.d,) * 3}, got {C.shape}")
        i, j, k = np.indices(C.shape)
        self.cubic = np.where((i < j) & (j < k), C, 0.0)
        c = self.cubic
        self._sym = (c + c.transpose(0, 2, 1) + c.transpose(1, 0, 2)
                     + c.transpose(1, 2, 0) + c.transpose(2, 0, 1) + c.transpose(2, 1, 0))

    @property
    def linear(self):
        return self._quad.linear

    @property
    def quadratic(self):
        return self._quad.quadratic

    @property
    def constant(self):
        return self._quad.constant

    def evaluate(self, x) -> float:
        xf = self._check(x).astype(float)
        return self._quad.evaluate(x) + float(np.einsum("ijk,i,j,k->", self.cubic, xf, xf, xf))

    def evaluate_batch(self, X) -> np.ndarray:
        Xf = as_binary_matrix(X, self.d).astype(float)
        cub = np.einsum("nk,nk->n", np.einsum("ni,nj,ijk->nk", Xf, Xf, self.cubic), Xf)
        return self._quad.evaluate_batch(X) + cub

    def flip_delta(self, x, k: int) -> float:
        x = self._check(x)
        xf = x.astype(float)
        field = self.linear[k] + self._quad._sym[k] @ xf + 0.5 * xf @ self._sym[k] @ xf
        return float((1 - 2 * int(x[k])) * field)

    def _anneal_fast(self, x0, flips, uniforms, temps):
        return _sa_cubic(self.linear, self._quad._sym, self._sym, x0.astype(np.float64),
                         flips, uniforms, temps)

    def _exhaustive_fast(self):
        return _exhaustive_cubic(self.linear, self._quad._sym, self._sym)


class TabulatedObjective(PseudoBooleanObjective):
    """Objective stored as a table of all 2^d values.

    Entry ``s`` holds the value at the point whose bit ``i`` is ``(s >> i) & 1``.
    """

    def __init__(self, table):
        table = np.asarray(table, dtype=float)
        d = int(np.log2(table.size))
        if table.ndim != 1 or 2**d != table.size:
            raise ValueError("table length must be a power of two")
        self.table = table
        self.d = d
        self._weights = (1 << np.arange(d)).astype(np.int64)

    @classmethod
    def from_objective(cls, objective: PseudoBooleanObjective) -> "TabulatedObjective":
        return cls(objective.evaluate_batch(table_points(objective.d)))

    def index(self, x) -> int:
        return int(self._check(x).astype(np.int64) @ self._weights)

    def evaluate(self, x) -> float:
        return float(self.table[self.index(x)])

    def evaluate_batch(self, X) -> np.ndarray:
        return self.table[as_binary_matrix(X, self.d).astype(np.int64) @ self._weights]

    def _anneal_fast(self, x0, flips, uniforms, temps):
        s = _sa_table(self.table, self.index(x0), flips, uniforms, temps)
        return ((s >> np.arange(self.d)) & 1).astype(np.uint8)

    def _exhaustive_fast(self):
        # argmin over the table, ties to the lexicographically smallest point
        best = self.table.min()
        cands = table_points(self.d)[self.table == best]
        return lexicographic_min(cands).astype(np.float64)


def table_points(d: int) -> np.ndarray:
    """Points in table order (row ``s`` has bit ``i`` equal to ``(s >> i) & 1``)."""
    s = np.arange(2**d, dtype=np.int64)
    return ((s[:, None] >> np.arange(d)) & 1).astype(np.uint8)


def lexicographic_min(points: np.ndarray) -> np.ndarray:
    order = np.lexsort(points.T[::-1])
    return points[order[0]]


def exhaustive_minimum(objective: PseudoBooleanObjective, chunk_dim: int = 16):
    """Exact minimum over all 2^d points; minimizer ties go to the lexicographically smallest.

    Returns ``(minimizer, value)`` with the value re-evaluated at the minimizer.
    """
    d = objective.d
    fast = objective._exhaustive_fast()
    if fast is not None:
        x = as_binary_vector(np.asarray(fast).astype(np.uint8))
        return x, objective.evaluate(x)
    m = min(d, chunk_dim)
    suffix = all_binary_vectors(m)
    best_x, best_v = None, np.inf
    for c in range(2 ** (d - m)):
        prefix = np.array([(c >> (d - m - 1 - i)) & 1 for i in range(d - m)], dtype=np.uint8)
        X = np.hstack([np.broadcast_to(prefix, (suffix.shape[0], d - m)), suffix])
        vals = objective.evaluate_batch(X)
        i = int(np.argmin(vals))
        # chunks are visited in lexicographic order, so strict < keeps the smallest tie
        if vals[i] < best_v:
            best_x, best_v = X[i].copy(), float(vals[i])
    return as_binary_vector(best_x), objective.evaluate(best_x)


# -- compiled kernels ------------------------------------------------------------

@numba.njit(cache=True)
def _sa_quadratic(lin, Qs, x0, flips, uniforms, temps):
    d = lin.shape[0]
    x = x0.copy()
    h = lin.copy()
    for i in range(d):
        for j in range(d):
            h[i] += Qs[i, j] * x[j]
    cur = 0.0
    best = 0.0
    best_x = x.copy()
    for s in range(flips.shape[0]):
        T = temps[s]
        for q in range(flips.shape[1]):
            k = flips[s, q]
            sgn = 1.0 - 2.0 * x[k]
            delta = sgn * h[k]
            if not np.isfinite(delta):
                raise ValueError("non-finite flip delta")
            if delta <= 0.0 or uniforms[s, q] < np.exp(-delta / T):
                x[k] += sgn
                for j in range(d):
                    h[j] += Qs[j, k] * sgn
                cur += delta
                if cur < best:
                    best = cur
                    best_x[:] = x
    return best_x


@numba.njit(cache=True)
def _sa_cubic(lin, Qs, Cs, x0, flips, uniforms, temps):
    d = lin.shape[0]
    x = x0.copy()
    h = lin.copy()
    for i in range(d):
        for j in range(d):
            h[i] += Qs[i, j] * x[j]
            for l in range(d):
                h[i] += 0.5 * Cs[i, j, l] * x[j] * x[l]
    cur = 0.0
    best = 0.0
    best_x = x.copy()
    for s in range(flips.shape[0]):
        T = temps[s]
        for q in range(flips.shape[1]):
            k = flips[s, q]
            sgn = 1.0 - 2.0 * x[k]
            delta = sgn * h[k]
            if not np.isfinite(delta):
                raise ValueError("non-finite flip delta")
            if delta <= 0.0 or uniforms[s, q] < np.exp(-delta / T):
                x[k] += sgn
                for m in range(d):
                    acc = Qs[m, k]
                    for l in range(d):
                        acc += Cs[m, k, l] * x[l]
                    h[m] += sgn * acc
                cur += delta
                if cur < best:
                    best = cur
                    best_x[:] = x
    return best_x


@numba.njit(cache=True)
def _sa_table(table, s0, flips, uniforms, temps):
    s = s0
    cur = table[s]
    best = cur
    best_s = s
    for i in range(flips.shape[0]):
        T = temps[i]
        for q in range(flips.shape[1]):
            t = s ^ (1 << flips[i, q])
            delta = table[t] - cur
            if not np.isfinite(delta):
                raise ValueError("non-finite flip delta")
            if delta <= 0.0 or uniforms[i, q] < np.exp(-delta / T):
                s = t
                cur = table[t]
                if cur < best:
                    best = cur
                    best_s = s
    return best_s


@numba.njit(cache=True)
def _lex_less(a, b):
    for i in range(a.shape[0]):
        if a[i] != b[i]:
            return a[i] < b[i]
    return False


@numba.njit(cache=True)
def _exhaustive_quadratic(lin, Qs):
    # Gray-code walk: one bit flip per step, O(d) local-field update
    d = lin.shape[0]
    x = np.zeros(d)
    h = lin.copy()
    cur = 0.0
    best = 0.0
    best_x = x.copy()
    for g in range(1, 2**d):
        k = 0
        while (g >> k) & 1 == 0:
            k += 1
        sgn = 1.0 - 2.0 * x[k]
        cur += sgn * h[k]
        x[k] += sgn
        for j in range(d):
            h[j] += Qs[j, k] * sgn
        if cur < best or (cur == best and _lex_less(x, best_x)):
            best = cur
            best_x[:] = x
    return best_x


@numba.njit(cache=True)
def _exhaustive_cubic(lin, Qs, Cs):
    d = lin.shape[0]
    x = np.zeros(d)
    h = lin.copy()
    cur = 0.0
    best = 0.0
    best_x = x.copy()
    for g in range(1, 2**d):
        k = 0
        while (g >> k) & 1 == 0:
            k += 1
        sgn = 1.0 - 2.0 * x[k]
        cur += sgn * h[k]
        x[k] += sgn
        for m in range(d):
            acc = Qs[m, k]
            for l in range(d):
                acc += Cs[m, k, l] * x[l]
            h[m] += sgn * acc
        if cur < best or (cur == best and _lex_less(x, best_x)):
            best = cur
            best_x[:] = x
    return best_x
