"""Optimization strategies: BOCS with GP-Hedge and its three baselines.

All four strategies are scikit-learn style estimators. ``optimize`` evaluates
the initial points, runs ``n_iter`` iterations and stores the run in
``trace_``::

    opt = BOCSGPHedge(n_iter=100, random_state=0)
    opt.optimize(instance, X_init)
    opt.best_value_, opt.trace_.best_so_far
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable

import numpy as np
from scipy.special import softmax
from sklearn.base import BaseEstimator

from .annealer import AnnealConfig, multi_restart
from .core import (Dataset, Observation, as_binary_matrix, best_observation, check_random_state,
                   derive_rng, derive_seed, draw_seed, random_unevaluated)
from .gp import DEFAULT_GRID, JITTER_FLOOR, GammaGrid, HammingGP
from .sparse_regression import BOCSSurrogate, SparsityMask

DEFAULT_KAPPAS = tuple(float(k) for k in range(1, 11))

# derive_rng stream ids within one iteration
_BOCS, _NOMINATE, _SELECT, _RANDOM, _SPINFLIP = range(5)


@dataclass
class HedgeState:
    kappas: np.ndarray
    gains: np.ndarray
    eta: float = 1.0

    @classmethod
    def initial(cls, kappas=DEFAULT_KAPPAS, eta: float = 1.0) -> "HedgeState":
        kappas = np.asarray(kappas, dtype=float)
        if kappas.size == 0 or np.any(kappas <= 0):
            raise ValueError("kappas must be a nonempty list of positive values")
        if not eta > 0:
            raise ValueError("eta must be positive")
        return cls(kappas, np.zeros(kappas.size), float(eta))

    @property
    def n_arms(self) -> int:
        return self.kappas.size


def hedge_probabilities(state: HedgeState, eligible) -> np.ndarray:
    """Softmax of ``eta * gains`` restricted to ``eligible`` arms (in the given order)."""
    eligible = list(eligible)
    if not eligible:
        raise ValueError("eligible arm set is empty")
    return softmax(state.eta * state.gains[eligible])


@dataclass(frozen=True)
class ArmNomination:
    arm: int
    candidate: np.ndarray
    acquisition_value: float
    unevaluated: bool


def nominate_candidates(ds: Dataset, kappas=DEFAULT_KAPPAS, anneal_config: AnnealConfig = AnnealConfig(),
                        rng=None, gamma_grid: GammaGrid = DEFAULT_GRID, jitter: float = JITTER_FLOOR,
                        table_max_dim: int = 16):
    """Minimize ``mu - kappa_m * sigma`` for every arm on one GP fitted to ``ds``.

    Returns ``(nominations, gp)``.
    """
    if len(ds) == 0:
        raise ValueError("cannot nominate from an empty dataset")
    gp = HammingGP(gamma=None, gamma_grid=gamma_grid, jitter=jitter,
                   table_max_dim=table_max_dim).fit(ds.X, ds.y)
    seed = draw_seed(check_random_state(rng))
    init = [best_observation(ds).point]
    schedule = anneal_config.schedule()
    noms = []
    for m, kappa in enumerate(kappas):
        obj = gp.lcb_objective(kappa)
        x, v = multi_restart(obj, init, anneal_config.runs, schedule, derive_seed(seed, m))
        noms.append(ArmNomination(m, x, v, x not in ds))
    return noms, gp


def hedge_select(noms: list[ArmNomination], state: HedgeState, ds: Dataset, rng=None):
    """Pick among arms with unevaluated candidates; random fallback otherwise.

    Returns ``(x, arm or None, fallback_flag)``.
    """
    rng = check_random_state(rng)
    if len(noms) != state.n_arms:
        raise ValueError("need one nomination per arm")
    eligible = [n.arm for n in noms if n.unevaluated]
    if eligible:
        p = hedge_probabilities(state, eligible)
        j = eligible[int(rng.choice(len(eligible), p=p))]
        return noms[j].candidate, j, 0
    return random_unevaluated(ds.d, ds, rng), None, 1


def hedge_rewards(noms: list[ArmNomination], gp_after: HammingGP) -> np.ndarray:
    """Reward ``-mu_t(candidate)`` for every arm under the GP refitted after evaluation."""
    return -gp_after.predict(np.stack([n.candidate for n in noms]))


def hedge_reward_update(state: HedgeState, noms, stagnation: bool, fallback: int,
                        gp_after: HammingGP | None):
    """Add rewards to the gains when ``stagnation`` and no fallback; returns ``(state, rewards)``."""
    if stagnation and fallback == 0:
        rewards = hedge_rewards(noms, gp_after)
    else:
        rewards = np.zeros(state.n_arms)
    return HedgeState(state.kappas, state.gains + rewards, state.eta), rewards


def bocs_propose(ds: Dataset, mask: SparsityMask | None = None, n_sweeps: int = 200,
                 anneal_config: AnnealConfig = AnnealConfig(), rng=None) -> np.ndarray:
    """Minimizer of one posterior draw of the sparse quadratic surrogate.

    The result may already be in ``ds``; that is the stagnation signal.
    """
    if len(ds) == 0:
        raise ValueError("cannot propose from an empty dataset")
    rng = check_random_state(rng)
    surrogate = BOCSSurrogate(mask, n_sweeps, random_state=rng).fit(ds.X, ds.y)
    x, _ = multi_restart(surrogate.to_objective(), [best_observation(ds).point],
                         anneal_config.runs, anneal_config.schedule(), draw_seed(rng))
    return x


def spinflip_candidate(ds: Dataset, rng=None, max_flips: int = 3):
    """Uniform unevaluated point in the nearest nonexhausted k-flip shell of the incumbent.

    Returns ``(x, k)``; ``k`` is ``None`` when all shells up to ``max_flips``
    are exhausted and a uniformly random unevaluated point is returned.
    """
    rng = check_random_state(rng)
    best = best_observation(ds).point
    d = ds.d
    for k in range(1, min(max_flips, d) + 1):
        shell = []
        for idx in combinations(range(d), k):
            x = best.copy()
            x[list(idx)] ^= 1
            if x not in ds:
                shell.append(x)
        if shell:
            return shell[int(rng.integers(len(shell)))], k
    return random_unevaluated(d, ds, rng), None


@dataclass
class IterationRecord:
    t: int
    point: np.ndarray
    value: float
    source: str  # bocs | hedge | gp-hedge | random | spinflip | random-fallback
    stagnation: bool = False
    fallback: int = 0
    arm: int | None = None
    flips: int | None = None
    rewards: list | None = None
    gamma: float | None = None


@dataclass
class RunTrace:
    strategy: str
    instance_id: int | None
    initial: list[Observation]
    records: list[IterationRecord] = field(default_factory=list)

    @property
    def best_so_far(self) -> np.ndarray:
        """Best value after iteration t, for t = 0..T (t = 0 is the initial design)."""
        start = min(o.value for o in self.initial)
        vals = np.array([start] + [r.value for r in self.records])
        return np.minimum.accumulate(vals)

    @property
    def dataset_size(self) -> int:
        return len(self.initial) + len(self.records)

    @property
    def proposals(self) -> np.ndarray:
        if not self.records:
            return np.zeros((0, self.initial[0].point.size), dtype=np.uint8)
        return np.stack([r.point for r in self.records])


class BinaryOptimizer(BaseEstimator):
    """Shared parameters and loop of the four strategies.

    Parameters
    ----------
    n_iter : int
        Number of iterations T after the initial design.
    mask : SparsityMask or None
        Off-diagonal terms kept in the BOCS surrogate (``None``: all).
    gibbs_sweeps : int
        Gibbs sweeps per surrogate fit.
    sa_sweeps, sa_runs, sa_t_final_ratio :
        Annealing budget per acquisition minimization.
    kappas, eta :
        LCB arms and Hedge parameter.
    gamma_grid, jitter, table_max_dim :
        Hamming-kernel GP settings.
    random_state : int, Generator or None
    """

    strategy = "base"

    def __init__(self, n_iter: int = 100, mask: SparsityMask | None = None, gibbs_sweeps: int = 200,
                 sa_sweeps: int = 1000, sa_runs: int = 10, sa_t_final_ratio: float = 1e-3,
                 kappas=DEFAULT_KAPPAS, eta: float = 1.0, gamma_grid: GammaGrid | None = None,
                 jitter: float = JITTER_FLOOR, table_max_dim: int = 16, random_state=None):
        self.n_iter = n_iter
        self.mask = mask
        self.gibbs_sweeps = gibbs_sweeps
        self.sa_sweeps = sa_sweeps
        self.sa_runs = sa_runs
        self.sa_t_final_ratio = sa_t_final_ratio
        self.kappas = kappas
        self.eta = eta
        self.gamma_grid = gamma_grid
        self.jitter = jitter
        self.table_max_dim = table_max_dim
        self.random_state = random_state

    def _anneal_config(self) -> AnnealConfig:
        return AnnealConfig(self.sa_sweeps, self.sa_runs, self.sa_t_final_ratio)

    def _nominate(self, ds, rng):
        return nominate_candidates(ds, self.kappas, self._anneal_config(), rng,
                                   self.gamma_grid or DEFAULT_GRID, self.jitter, self.table_max_dim)

    def _bocs(self, ds, rng):
        return bocs_propose(ds, self.mask, self.gibbs_sweeps, self._anneal_config(), rng)

    def optimize(self, objective: Callable, X_init, instance_id: int | None = None):
        """Evaluate ``X_init`` (distinct rows) and run ``n_iter`` iterations on ``objective``."""
        if self.n_iter < 0:
            raise ValueError("n_iter must be >= 0")
        X_init = as_binary_matrix(X_init)
        f = objective.evaluate if hasattr(objective, "evaluate") else objective
        ds = Dataset(X_init.shape[1])
        initial = [ds.add(x, f(x)) for x in X_init]
        rs = self.random_state
        seed = int(rs) if isinstance(rs, (int, np.integer)) else draw_seed(check_random_state(rs))
        self.hedge_state_ = HedgeState.initial(self.kappas, self.eta)
        trace = RunTrace(self.strategy, instance_id, initial)
        for t in range(1, self.n_iter + 1):
            rec = self._step(t, ds, f, seed)
            trace.records.append(rec)
        self.trace_ = trace
        self.dataset_ = ds
        best = best_observation(ds)
        self.best_x_, self.best_value_ = best.point, best.value
        return self

    def _evaluate(self, ds, f, x):
        return ds.add(x, f(x)).value

    def _step(self, t, ds, f, seed) -> IterationRecord:
        x_bocs = self._bocs(ds, derive_rng(seed, t, _BOCS))
        if x_bocs not in ds:
            return IterationRecord(t, x_bocs, self._evaluate(ds, f, x_bocs), "bocs")
        return self._on_stagnation(t, ds, f, seed)

    def _on_stagnation(self, t, ds, f, seed) -> IterationRecord:
        raise NotImplementedError


class BOCSGPHedge(BinaryOptimizer):
    """BOCS; when its proposal was already evaluated, GP-Hedge over LCB arms picks the point."""

    strategy = "bocs-gp-hedge"

    def _on_stagnation(self, t, ds, f, seed):
        noms, gp = self._nominate(ds, derive_rng(seed, t, _NOMINATE))
        x, arm, fallback = hedge_select(noms, self.hedge_state_, ds, derive_rng(seed, t, _SELECT))
        value = self._evaluate(ds, f, x)
        gp_after = None
        if fallback == 0:
            gp_after = HammingGP(gamma=gp.gamma_, jitter=self.jitter).fit(ds.X, ds.y)
        self.hedge_state_, rewards = hedge_reward_update(self.hedge_state_, noms, True, fallback,
                                                         gp_after)
        source = "hedge" if fallback == 0 else "random-fallback"
        return IterationRecord(t, x, value, source, True, fallback, arm,
                               rewards=rewards.tolist(), gamma=gp.gamma_)


class BOCSRandom(BinaryOptimizer):
    """BOCS; a uniformly random unevaluated point replaces stagnated proposals."""

    strategy = "bocs-random"

    def _on_stagnation(self, t, ds, f, seed):
        x = random_unevaluated(ds.d, ds, derive_rng(seed, t, _RANDOM))
        return IterationRecord(t, x, self._evaluate(ds, f, x), "random", True)


class BOCSSpinFlip(BinaryOptimizer):
    """BOCS; stagnated proposals are replaced by a 1/2/3-flip neighbor of the incumbent."""

    strategy = "bocs-spinflip"

    def _on_stagnation(self, t, ds, f, seed):
        x, k = spinflip_candidate(ds, derive_rng(seed, t, _SPINFLIP))
        source = "spinflip" if k is not None else "random-fallback"
        return IterationRecord(t, x, self._evaluate(ds, f, x), source, True,
                               fallback=int(k is None), flips=k)


class GPHedge(BinaryOptimizer):
    """GP-Hedge at every iteration; the BOCS surrogate is never used."""

    strategy = "gp-hedge"

    def _step(self, t, ds, f, seed):
        noms, gp = self._nominate(ds, derive_rng(seed, t, _NOMINATE))
        x, arm, fallback = hedge_select(noms, self.hedge_state_, ds, derive_rng(seed, t, _SELECT))
        value = self._evaluate(ds, f, x)
        gp_after = None
        if fallback == 0:
            gp_after = HammingGP(gamma=gp.gamma_, jitter=self.jitter).fit(ds.X, ds.y)
        # same reward rule as the hybrid's stagnation phase, applied every iteration
        self.hedge_state_, rewards = hedge_reward_update(self.hedge_state_, noms, True, fallback,
                                                         gp_after)
        source = "gp-hedge" if fallback == 0 else "random-fallback"
        return IterationRecord(t, x, value, source, False, fallback, arm,
                               rewards=rewards.tolist(), gamma=gp.gamma_)


STRATEGIES = {cls.strategy: cls for cls in (BOCSGPHedge, BOCSRandom, BOCSSpinFlip, GPHedge)}


def make_optimizer(kind: str, **params) -> BinaryOptimizer:
    try:
        return STRATEGIES[kind](**params)
    except KeyError:
        raise ValueError(f"unknown strategy {kind!r}; choose from {sorted(STRATEGIES)}") from None


def run_strategy(kind: str, objective, initial_points, n_iter: int, config: dict | None = None,
                 seed: int = 0, instance_id: int | None = None) -> RunTrace:
    opt = make_optimizer(kind, n_iter=n_iter, random_state=seed, **(config or {}))
    return opt.optimize(objective, initial_points, instance_id).trace_
