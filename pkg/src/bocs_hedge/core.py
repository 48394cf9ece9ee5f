"""Binary vectors, observation storage and seeded randomness."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from numbers import Integral
from typing import Iterator, Sequence

import numpy as np


class DimensionMismatchError(ValueError):
    """Raised when binary vectors of different dimension are combined."""


class DuplicatePointError(ValueError):
    """Raised when a point already present in a Dataset is inserted again."""


class SearchSpaceExhaustedError(RuntimeError):
    """Raised when every point of {0,1}^d has already been evaluated."""


def as_binary_vector(x, d: int | None = None) -> np.ndarray:
    """Validate ``x`` as a 1-D 0/1 vector and return it as a read-only uint8 array."""
    arr = np.asarray(x)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"expected a non-empty 1-D binary vector, got shape {arr.shape}")
    if arr.dtype == bool:
        arr = arr.astype(np.uint8)
    elif not np.all((arr == 0) | (arr == 1)):
        raise ValueError("binary vector entries must be exactly 0 or 1")
    out = np.array(arr, dtype=np.uint8)
    if d is not None and out.size != d:
        raise DimensionMismatchError(f"expected dimension {d}, got {out.size}")
    out.setflags(write=False)
    return out


def as_binary_matrix(X, d: int | None = None) -> np.ndarray:
    """Validate a 2-D array whose rows are binary vectors."""
    arr = np.asarray(X)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] == 0:
        raise ValueError(f"expected a 2-D binary array, got shape {arr.shape}")
    if arr.dtype != bool and not np.all((arr == 0) | (arr == 1)):
        raise ValueError("binary array entries must be exactly 0 or 1")
    out = arr.astype(np.uint8)
    if d is not None and out.shape[1] != d:
        raise DimensionMismatchError(f"expected dimension {d}, got {out.shape[1]}")
    return out


def hamming_distance(a, b) -> int:
    a = as_binary_vector(a)
    b = as_binary_vector(b)
    if a.size != b.size:
        raise DimensionMismatchError(f"dimension mismatch: {a.size} vs {b.size}")
    return int(np.count_nonzero(a != b))


def pairwise_hamming(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Hamming distances between rows of ``A`` (n, d) and rows of ``B`` (m, d)."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatchError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    # |a - b| summed over bits == a.(1-b) + (1-a).b for 0/1 entries
    D = A @ (1.0 - B).T + (1.0 - A) @ B.T
    return np.rint(D).astype(np.int64)


def bits_to_string(x) -> str:
    """Fixed-width 0/1 string, first coordinate first."""
    return "".join("1" if v else "0" for v in np.asarray(x).tolist())


def string_to_bits(s: str) -> np.ndarray:
    if not s or any(c not in "01" for c in s):
        raise ValueError(f"not a 0/1 string: {s!r}")
    return as_binary_vector([1 if c == "1" else 0 for c in s])


def _key(x: np.ndarray) -> bytes:
    return np.packbits(x).tobytes()


def all_binary_vectors(d: int) -> np.ndarray:
    """All 2^d points, lexicographic order (first coordinate most significant)."""
    return np.array(list(product((0, 1), repeat=d)), dtype=np.uint8)


@dataclass(frozen=True)
class Observation:
    point: np.ndarray
    value: float

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError(f"observation value must be finite, got {self.value}")


class Dataset:
    """Ordered observations with O(1) membership queries.

    Inserting a point that is already present raises :class:`DuplicatePointError`.
    """

    def __init__(self, d: int):
        if d < 1:
            raise ValueError("dimension must be positive")
        self.d = int(d)
        self._observations: list[Observation] = []
        self._index: dict[bytes, int] = {}
        self._best = -1

    @classmethod
    def from_arrays(cls, X, y) -> "Dataset":
        X = as_binary_matrix(X)
        ds = cls(X.shape[1])
        for x, v in zip(X, np.asarray(y, dtype=float)):
            ds.add(x, v)
        return ds

    def add(self, x, value: float) -> Observation:
        x = as_binary_vector(x, self.d)
        k = _key(x)
        if k in self._index:
            raise DuplicatePointError(f"point {bits_to_string(x)} already evaluated")
        obs = Observation(x, float(value))
        self._index[k] = len(self._observations)
        self._observations.append(obs)
        # strict < keeps the earliest of tied minima
        if self._best < 0 or obs.value < self._observations[self._best].value:
            self._best = len(self._observations) - 1
        return obs

    def __contains__(self, x) -> bool:
        x = as_binary_vector(x, self.d)
        return _key(x) in self._index

    def __len__(self) -> int:
        return len(self._observations)

    def __iter__(self) -> Iterator[Observation]:
        return iter(self._observations)

    def __getitem__(self, i: int) -> Observation:
        return self._observations[i]

    @property
    def X(self) -> np.ndarray:
        if not self._observations:
            return np.zeros((0, self.d), dtype=np.uint8)
        return np.stack([o.point for o in self._observations])

    @property
    def y(self) -> np.ndarray:
        return np.array([o.value for o in self._observations], dtype=float)

    def copy(self) -> "Dataset":
        out = Dataset(self.d)
        out._observations = list(self._observations)
        out._index = dict(self._index)
        out._best = self._best
        return out


def best_observation(ds: Dataset) -> Observation:
    if len(ds) == 0:
        raise ValueError("best_observation of an empty dataset")
    return ds[ds._best]


# -- randomness -------------------------------------------------------------

def check_random_state(seed) -> np.random.Generator:
    """Turn ``None``, an int or a Generator into a ``np.random.Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (Integral, np.integer)):
        return np.random.default_rng(seed)
    raise ValueError(f"{seed!r} cannot be used to seed a numpy Generator")


def derive_seed(*keys: int) -> int:
    """Deterministic 63-bit seed from a master seed and task indices."""
    ss = np.random.SeedSequence([int(k) & 0xFFFFFFFFFFFFFFFF for k in keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def derive_rng(*keys: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*keys))


def draw_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**63 - 1))


def random_unevaluated(d: int, ds: Dataset, rng) -> np.ndarray:
    """Uniform draw from {0,1}^d minus the points already in ``ds``."""
    rng = check_random_state(rng)
    if ds.d != d:
        raise DimensionMismatchError(f"dataset dimension {ds.d} != {d}")
    total = 2.0**d
    if len(ds) >= total:
        raise SearchSpaceExhaustedError(f"all 2^{d} points have been evaluated")
    # rejection sampling; enumerate the complement once it is small
    if d <= 20 and len(ds) > total / 2:
        free = [x for x in all_binary_vectors(d) if x not in ds]
        return as_binary_vector(free[rng.integers(len(free))])
    while True:
        x = rng.integers(0, 2, size=d, dtype=np.uint8)
        if x not in ds:
            return as_binary_vector(x)


def stack_points(points: Sequence) -> np.ndarray:
    return np.stack([as_binary_vector(p) for p in points])
