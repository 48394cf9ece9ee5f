"""Simulated annealing over {0,1}^d with single-bit-flip Metropolis moves."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import as_binary_vector, check_random_state, derive_rng, draw_seed
from .objectives import PseudoBooleanObjective

# derive_rng key reserved for the temperature probe stream of multi_restart
_PROBE_KEY = 0x50524F4245


@dataclass(frozen=True)
class SaSchedule:
    """Geometric cooling from ``t_init`` to ``t_final`` over ``sweeps`` sweeps.

    One sweep proposes ``d`` flips at uniformly random bit indices. When
    ``t_init`` is left as ``None`` it is set by :meth:`resolve` to
    ``max(1, max - min)`` of the objective over ``n_probes`` random points and
    ``t_final = t_final_ratio * t_init``.
    """

    sweeps: int = 1000
    t_init: float | None = None
    t_final: float | None = None
    t_final_ratio: float = 1e-3
    n_probes: int = 100

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.t_init is not None:
            t_final = self.t_final if self.t_final is not None else self.t_final_ratio * self.t_init
            if not (self.t_init >= t_final > 0):
                raise ValueError("need t_init >= t_final > 0")

    @property
    def resolved(self) -> bool:
        return self.t_init is not None

    def resolve(self, objective: PseudoBooleanObjective, rng=None) -> "SaSchedule":
        if self.resolved:
            if self.t_final is None:
                return replace(self, t_final=self.t_final_ratio * self.t_init)
            return self
        rng = check_random_state(rng)
        probes = rng.integers(0, 2, size=(self.n_probes, objective.d), dtype=np.uint8)
        vals = objective.evaluate_batch(probes)
        t_init = max(1.0, float(np.max(vals) - np.min(vals)))
        return replace(self, t_init=t_init, t_final=self.t_final_ratio * t_init)

    def temperatures(self) -> np.ndarray:
        if not self.resolved:
            raise ValueError("schedule has no temperatures until resolved")
        t_final = self.t_final if self.t_final is not None else self.t_final_ratio * self.t_init
        if self.sweeps == 1:
            return np.array([self.t_init])
        return self.t_init * (t_final / self.t_init) ** (np.arange(self.sweeps) / (self.sweeps - 1))


@dataclass(frozen=True)
class AnnealConfig:
    """Schedule plus restart count, as used for acquisition minimization."""

    sweeps: int = 1000
    runs: int = 10
    t_final_ratio: float = 1e-3
    n_probes: int = 100

    def schedule(self) -> SaSchedule:
        return SaSchedule(sweeps=self.sweeps, t_final_ratio=self.t_final_ratio,
                          n_probes=self.n_probes)


def metropolis_accept(delta: float, temperature: float, u: float) -> bool:
    """Accept with probability ``min(1, exp(-delta / T))`` given a uniform draw ``u``."""
    if delta <= 0.0:
        return True
    with np.errstate(over="ignore", under="ignore"):
        return bool(u < np.exp(-delta / temperature))


def _anneal_generic(objective, x0, flips, uniforms, temps):
    x = x0.copy()
    cur = 0.0
    best = 0.0
    best_x = x.copy()
    for s in range(flips.shape[0]):
        T = temps[s]
        for q in range(flips.shape[1]):
            k = int(flips[s, q])
            delta = objective.flip_delta(x, k)
            if not np.isfinite(delta):
                raise ValueError("non-finite flip delta")
            if metropolis_accept(delta, T, uniforms[s, q]):
                x[k] ^= 1
                cur += delta
                if cur < best:
                    best = cur
                    best_x = x.copy()
    return best_x


def anneal(objective: PseudoBooleanObjective, init, schedule: SaSchedule | None = None,
           rng=None, use_fast: bool = True):
    """Anneal from ``init``; return the best point visited and its value."""
    rng = check_random_state(rng)
    schedule = schedule or SaSchedule()
    d = objective.d
    x0 = np.array(as_binary_vector(init, d))
    schedule = schedule.resolve(objective, rng)
    temps = schedule.temperatures()
    flips = rng.integers(0, d, size=(schedule.sweeps, d))
    uniforms = rng.random((schedule.sweeps, d))
    best_x = objective._anneal_fast(x0, flips, uniforms, temps) if use_fast else None
    if best_x is None:
        best_x = _anneal_generic(objective, x0, flips, uniforms, temps)
    best_x = as_binary_vector(np.rint(best_x).astype(np.uint8))
    value = objective.evaluate(best_x)
    if not np.isfinite(value):
        raise ValueError("objective returned a non-finite value")
    return best_x, value


def multi_restart(objective: PseudoBooleanObjective, inits: Sequence, runs: int = 10,
                  schedule: SaSchedule | None = None, random_state=None, return_all: bool = False):
    """Run ``runs`` independent anneals and keep the smallest value.

    Run ``r`` starts from ``inits[r % len(inits)]`` with generator
    ``derive_rng(seed, r)``; an unresolved schedule is resolved once from the
    probe stream ``derive_rng(seed, _PROBE_KEY)`` and shared by all runs.
    Ties in value go to the lexicographically smallest point.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if len(inits) == 0:
        raise ValueError("need at least one initial point")
    if isinstance(random_state, (int, np.integer)):
        seed = int(random_state)
    else:
        seed = draw_seed(check_random_state(random_state))
    schedule = (schedule or SaSchedule()).resolve(objective, derive_rng(seed, _PROBE_KEY))
    results = [anneal(objective, inits[r % len(inits)], schedule, derive_rng(seed, r))
               for r in range(runs)]
    best = min(results, key=lambda xv: (xv[1], tuple(xv[0].tolist())))
    if return_all:
        return best, results
    return best
