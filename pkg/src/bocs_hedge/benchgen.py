"""Fully connected QUBO/HUBO benchmark instances and reference values."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .annealer import SaSchedule, multi_restart
from .core import as_binary_vector, bits_to_string, derive_seed, string_to_bits
from .objectives import CubicObjective, QuadraticObjective, exhaustive_minimum


class ExhaustiveTooLargeError(ValueError):
    pass


def pair_indices(d: int) -> np.ndarray:
    """Canonical (i<j) pair order, shape (C(d,2), 2)."""
    i, j = np.triu_indices(d, 1)
    return np.stack([i, j], axis=1)


def triple_indices(d: int) -> np.ndarray:
    """Canonical (i<j<k) triple order, shape (C(d,3), 3)."""
    return np.array(list(combinations(range(d), 3)), dtype=np.int64).reshape(-1, 3)


@dataclass(frozen=True, eq=False)
class QuboInstance:
    """Coefficients stored in canonical upper-triangular order."""

    d: int
    linear: np.ndarray
    quadratic: np.ndarray
    seed: int | None = None
    kind = "qubo"

    def __post_init__(self):
        if self.linear.shape != (self.d,):
            raise ValueError("linear must have length d")
        if self.quadratic.shape != (self.d * (self.d - 1) // 2,):
            raise ValueError("quadratic must have C(d,2) entries")
        if not (np.all(np.isfinite(self.linear)) and np.all(np.isfinite(self.quadratic))):
            raise ValueError("coefficients must be finite")

    def quadratic_matrix(self) -> np.ndarray:
        Q = np.zeros((self.d, self.d))
        p = pair_indices(self.d)
        Q[p[:, 0], p[:, 1]] = self.quadratic
        return Q

    def to_objective(self) -> QuadraticObjective:
        return QuadraticObjective(self.linear, self.quadratic_matrix())

    def evaluate(self, x) -> float:
        return evaluate_qubo(self, x)

    __call__ = evaluate

    def lift(self) -> "HuboInstance":
        """Same polynomial as a HUBO with zero cubic terms."""
        n3 = self.d * (self.d - 1) * (self.d - 2) // 6
        return HuboInstance(self.d, self.linear, self.quadratic, self.seed, np.zeros(n3))

    def to_dict(self) -> dict:
        p = pair_indices(self.d)
        return {
            "kind": self.kind,
            "d": self.d,
            "seed": self.seed,
            "linear": self.linear.tolist(),
            "quadratic": [{"i": int(i), "j": int(j), "v": float(v)}
                          for (i, j), v in zip(p, self.quadratic)],
            "cubic": [],
        }


@dataclass(frozen=True, eq=False)
class HuboInstance(QuboInstance):
    cubic: np.ndarray = field(default=None)
    kind = "hubo"

    def __post_init__(self):
        super().__post_init__()
        n3 = self.d * (self.d - 1) * (self.d - 2) // 6
        if self.cubic is None or self.cubic.shape != (n3,):
            raise ValueError("cubic must have C(d,3) entries")
        if not np.all(np.isfinite(self.cubic)):
            raise ValueError("coefficients must be finite")

    def cubic_tensor(self) -> np.ndarray:
        C = np.zeros((self.d,) * 3)
        t = triple_indices(self.d)
        if len(t):
            C[t[:, 0], t[:, 1], t[:, 2]] = self.cubic
        return C

    def to_objective(self) -> CubicObjective:
        return CubicObjective(self.linear, self.quadratic_matrix(), self.cubic_tensor())

    def evaluate(self, x) -> float:
        return evaluate_hubo(self, x)

    __call__ = evaluate

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["cubic"] = [{"i": int(i), "j": int(j), "k": int(k), "v": float(v)}
                        for (i, j, k), v in zip(triple_indices(self.d), self.cubic)]
        return out


def generate_qubo(d: int, seed: int) -> QuboInstance:
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = np.random.default_rng(seed)
    linear = rng.standard_normal(d)
    quadratic = rng.standard_normal(d * (d - 1) // 2)
    return QuboInstance(d, linear, quadratic, seed)


def generate_hubo(d: int, seed: int) -> HuboInstance:
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = np.random.default_rng(seed)
    linear = rng.standard_normal(d)
    quadratic = rng.standard_normal(d * (d - 1) // 2)
    cubic = rng.standard_normal(d * (d - 1) * (d - 2) // 6)
    return HuboInstance(d, linear, quadratic, seed, cubic)


def evaluate_qubo(inst: QuboInstance, x) -> float:
    x = as_binary_vector(x, inst.d).astype(float)
    p = pair_indices(inst.d)
    return float(inst.linear @ x + inst.quadratic @ (x[p[:, 0]] * x[p[:, 1]]))


def evaluate_hubo(inst: HuboInstance, x) -> float:
    xv = as_binary_vector(x, inst.d)
    t = triple_indices(inst.d)
    cub = 0.0
    if len(t):
        xf = xv.astype(float)
        cub = float(inst.cubic @ (xf[t[:, 0]] * xf[t[:, 1]] * xf[t[:, 2]]))
    return evaluate_qubo(inst, xv) + cub


def generate_instance(kind: str, d: int, seed: int) -> QuboInstance:
    if kind == "qubo":
        return generate_qubo(d, seed)
    if kind == "hubo":
        return generate_hubo(d, seed)
    raise ValueError(f"unknown benchmark kind {kind!r}")


def instance_from_dict(data: dict) -> QuboInstance:
    d = int(data["d"])
    linear = np.array(data["linear"], dtype=float)
    quad = np.zeros(d * (d - 1) // 2)
    pos = {(int(i), int(j)): n for n, (i, j) in enumerate(pair_indices(d))}
    for e in data["quadratic"]:
        quad[pos[(int(e["i"]), int(e["j"]))]] = float(e["v"])
    seed = data.get("seed")
    if data["kind"] == "qubo":
        return QuboInstance(d, linear, quad, seed)
    if data["kind"] == "hubo":
        cub = np.zeros(d * (d - 1) * (d - 2) // 6)
        tpos = {tuple(int(v) for v in t): n for n, t in enumerate(triple_indices(d))}
        for e in data["cubic"]:
            cub[tpos[(int(e["i"]), int(e["j"]), int(e["k"]))]] = float(e["v"])
        return HuboInstance(d, linear, quad, seed, cub)
    raise ValueError(f"unknown benchmark kind {data['kind']!r}")


def generate_initial_points(d: int, n: int, seed: int) -> list[np.ndarray]:
    """``n`` distinct uniform random points; duplicates are re-drawn."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > 2.0**d:
        raise ValueError(f"cannot draw {n} distinct points from 2^{d}")
    rng = np.random.default_rng(seed)
    seen: set[bytes] = set()
    points = []
    while len(points) < n:
        x = rng.integers(0, 2, size=d, dtype=np.uint8)
        key = x.tobytes()
        if key not in seen:
            seen.add(key)
            points.append(as_binary_vector(x))
    return points


@dataclass
class ReferenceValue:
    value: float
    minimizer: np.ndarray | None
    method: str  # "exhaustive" or "multi-restart-sa"

    def to_dict(self) -> dict:
        return {"value": self.value,
                "minimizer": None if self.minimizer is None else bits_to_string(self.minimizer),
                "method": self.method}

    @classmethod
    def from_dict(cls, data: dict) -> "ReferenceValue":
        m = data.get("minimizer")
        return cls(float(data["value"]), None if m is None else string_to_bits(m), data["method"])


def reference_value(objective, d: int, mode: str = "exhaustive", *, sa_runs: int = 1000,
                    schedule: SaSchedule | None = None, seed: int = 0,
                    max_exhaustive_dim: int = 25) -> ReferenceValue:
    """Reference value f-dagger by exhaustive enumeration or multi-restart SA.

    ``objective`` is an instance or a pseudo-boolean objective; SA restarts
    start from uniform random points.
    """
    obj = objective.to_objective() if hasattr(objective, "to_objective") else objective
    if obj.d != d:
        raise ValueError(f"objective dimension {obj.d} != {d}")
    if mode == "exhaustive":
        if d > max_exhaustive_dim:
            raise ExhaustiveTooLargeError(
                f"exhaustive reference requested for d={d} > cap {max_exhaustive_dim}")
        x, v = exhaustive_minimum(obj)
        return ReferenceValue(v, x, "exhaustive")
    if mode in ("sa", "multi-restart-sa"):
        rng = np.random.default_rng(derive_seed(seed, 1))
        inits = rng.integers(0, 2, size=(sa_runs, d), dtype=np.uint8)
        x, v = multi_restart(obj, inits, runs=sa_runs, schedule=schedule, random_state=seed)
        return ReferenceValue(v, x, "multi-restart-sa")
    raise ValueError(f"unknown reference mode {mode!r}")


@dataclass
class InstanceSuite:
    """Instances of one benchmark sharing a single list of initial points."""

    kind: str
    d: int
    instances: list
    initial_points: list
    seeds: list
    initial_seed: int

    @classmethod
    def generate(cls, kind: str, d: int, n_instances: int, n_initial: int, seed: int
                 ) -> "InstanceSuite":
        seeds = [derive_seed(seed, 0, i) for i in range(n_instances)]
        init_seed = derive_seed(seed, 1)
        return cls(kind, d, [generate_instance(kind, d, s) for s in seeds],
                   generate_initial_points(d, n_initial, init_seed), seeds, init_seed)

    def to_dict(self, include_coefficients: bool = True) -> dict:
        out = {"kind": self.kind, "d": self.d, "seeds": list(self.seeds),
               "initial_seed": self.initial_seed,
               "initial_points": [bits_to_string(x) for x in self.initial_points]}
        if include_coefficients:
            out["instances"] = [inst.to_dict() for inst in self.instances]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "InstanceSuite":
        if "instances" in data:
            instances = [instance_from_dict(e) for e in data["instances"]]
        else:
            instances = [generate_instance(data["kind"], data["d"], s) for s in data["seeds"]]
        return cls(data["kind"], int(data["d"]), instances,
                   [string_to_bits(s) for s in data["initial_points"]],
                   [int(s) for s in data["seeds"]], int(data["initial_seed"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "InstanceSuite":
        return cls.from_dict(json.loads(Path(path).read_text()))
