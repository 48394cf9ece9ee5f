"""Experiment configuration.

A config file is YAML (or JSON) whose keys are the field names of
:class:`ExperimentConfig`; unknown keys are rejected. Example::

    benchmark: qubo
    d: 15
    n_instances: 20
    n_iterations: 120
    n_initial: 20
    strategies: [bocs-gp-hedge, bocs-random]
    sparsity_levels: [1.0, 0.4]
    seed: 7
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from ..gp import GammaGrid
from ..strategies import DEFAULT_KAPPAS, STRATEGIES

HYBRID = "bocs-gp-hedge"


@dataclass
class ExperimentConfig:
    benchmark: str = "qubo"
    d: int = 50
    n_instances: int = 50
    n_iterations: int = 500
    n_initial: int = 50
    strategies: list = field(default_factory=lambda: ["gp-hedge", "bocs-random", HYBRID])
    sparsity_levels: list | None = None
    reference_mode: str = "auto"  # auto | exhaustive | sa
    reference_sa_runs: int = 1000
    exhaustive_max_dim: int = 25
    sa_sweeps: int = 1000
    sa_runs: int = 10
    sa_t_final_ratio: float = 1e-3
    gibbs_sweeps: int = 200
    kappas: list = field(default_factory=lambda: list(DEFAULT_KAPPAS))
    eta: float = 1.0
    gamma_min: float = 1e-3
    gamma_max: float = 10**0.5
    n_gamma: int = 15
    jitter: float = 1e-8
    table_max_dim: int = 16
    seed: int | None = None
    output_dir: str = "results"
    n_jobs: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.benchmark not in ("qubo", "hubo"):
            raise ValueError(f"benchmark must be qubo or hubo, got {self.benchmark!r}")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.n_iterations < 1:
            raise ValueError("n_iterations (T) must be >= 1")
        if self.n_instances < 1:
            raise ValueError("n_instances must be >= 1")
        if self.n_initial < 1 or self.n_initial + self.n_iterations > 2**self.d:
            raise ValueError("n_initial + n_iterations must fit in the search space")
        unknown = [s for s in self.strategies if s not in STRATEGIES]
        if unknown or not self.strategies:
            raise ValueError(f"unknown strategies {unknown}; choose from {sorted(STRATEGIES)}")
        if self.sparsity_levels is not None:
            if not self.sparsity_levels or any(not 0 <= s <= 1 for s in self.sparsity_levels):
                raise ValueError("sparsity levels must lie in [0, 1]")
        if self.reference_mode not in ("auto", "exhaustive", "sa"):
            raise ValueError("reference_mode must be auto, exhaustive or sa")
        if self.reference_mode == "exhaustive" and self.d > self.exhaustive_max_dim:
            raise ValueError(f"exhaustive reference needs d <= {self.exhaustive_max_dim}")
        if self.seed is None:
            raise ValueError("a master seed is required")
        self.gamma_grid()
        return self

    def resolved_reference_mode(self) -> str:
        if self.reference_mode == "auto":
            return "exhaustive" if self.d <= self.exhaustive_max_dim else "sa"
        return self.reference_mode

    def gamma_grid(self) -> GammaGrid:
        return GammaGrid.logspace(self.gamma_min, self.gamma_max, self.n_gamma)

    def optimizer_params(self) -> dict:
        return dict(gibbs_sweeps=self.gibbs_sweeps, sa_sweeps=self.sa_sweeps, sa_runs=self.sa_runs,
                    sa_t_final_ratio=self.sa_t_final_ratio, kappas=tuple(self.kappas),
                    eta=self.eta, gamma_grid=self.gamma_grid(), jitter=self.jitter,
                    table_max_dim=self.table_max_dim)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        extra = set(data) - names
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        data = yaml.safe_load(Path(path).read_text()) or {}
        return cls.from_dict(data)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")
