"""Run a benchmark experiment end to end and derive its report tables.

Output layout under ``output_dir``::

    config.json                      resolved configuration (minus output_dir / n_jobs)
    suite.json                       instances, seeds and the shared initial points
    references.json                  reference value per instance
    references/<key>.json            reference cache, reused across runs
    masks/instance_<i>_s<level>.json sparsity masks shared by all strategies
    traces/<label>/instance_<i>.jsonl
    aggregate/<label>.csv            t, mean_gap, stderr_gap, n, mean_gap_display
    summary.csv
    report/...                       plot-ready series (see :func:`build_report`)

Nothing written depends on wall-clock time or on ``n_jobs``, so repeating a
run with the same seed reproduces every file byte for byte.
"""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from ..annealer import SaSchedule
from ..benchgen import InstanceSuite, ReferenceValue, reference_value
from ..core import derive_seed
from ..sparse_regression import SparsityMask, generate_mask
from ..strategies import run_strategy
from .config import HYBRID, ExperimentConfig
from .io import read_trace, write_csv, write_trace
from .metrics import (aggregate, consecutive_hamming, hamming_to_optimum_series, relative_gap,
                      summary_rows)

log = logging.getLogger(__name__)

DISPLAY_FLOOR = 1e-6
_RUN_KEY, _MASK_KEY, _REF_KEY = 2, 3, 4
_MASK_FREE = ("gp-hedge",)  # strategies without a BOCS surrogate


def level_tag(level: float | None) -> str:
    return "" if level is None else f"_s{level:g}"


def run_label(strategy: str, level: float | None) -> str:
    return strategy if strategy in _MASK_FREE else strategy + level_tag(level)


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1) + "\n")


def _reference_key(kind, d, seed, mode, cfg: ExperimentConfig) -> str:
    key = f"{kind}_d{d}_{seed}_{mode}"
    if mode == "sa":
        key += f"_r{cfg.reference_sa_runs}_w{cfg.sa_sweeps}_f{cfg.sa_t_final_ratio:g}"
    return key


def _compute_reference(inst, seed, cfg: ExperimentConfig, mode: str) -> ReferenceValue:
    schedule = SaSchedule(sweeps=cfg.sa_sweeps, t_final_ratio=cfg.sa_t_final_ratio)
    return reference_value(inst, inst.d, mode, sa_runs=cfg.reference_sa_runs, schedule=schedule,
                           seed=derive_seed(seed, _REF_KEY),
                           max_exhaustive_dim=cfg.exhaustive_max_dim)


def compute_references(suite: InstanceSuite, cfg: ExperimentConfig, cache_dir=None,
                       n_jobs: int = 1) -> list[ReferenceValue]:
    """Reference values for every instance, read from / written to ``cache_dir``."""
    mode = cfg.resolved_reference_mode()
    cache = Path(cache_dir) if cache_dir is not None else None
    refs: list[ReferenceValue | None] = [None] * len(suite.instances)
    todo = []
    for i, seed in enumerate(suite.seeds):
        path = cache / f"{_reference_key(suite.kind, suite.d, seed, mode, cfg)}.json" if cache else None
        if path is not None and path.exists():
            refs[i] = ReferenceValue.from_dict(json.loads(path.read_text()))
        else:
            todo.append((i, path))
    computed = Parallel(n_jobs=n_jobs)(
        delayed(_compute_reference)(suite.instances[i], suite.seeds[i], cfg, mode) for i, _ in todo)
    for (i, path), ref in zip(todo, computed):
        refs[i] = ref
        if path is not None:
            _write_json(path, ref.to_dict())
    return refs


def _run_task(strategy, level, mask, instance_idx, inst, initial_points, reference, run_seed,
              cfg: ExperimentConfig, path: Path) -> None:
    params = cfg.optimizer_params()
    if strategy not in _MASK_FREE:
        params["mask"] = mask
    trace = run_strategy(strategy, inst.to_objective(), initial_points, cfg.n_iterations,
                         config=params, seed=run_seed, instance_id=instance_idx)
    header = {"strategy": strategy, "label": run_label(strategy, level), "instance": instance_idx,
              "instance_seed": inst.seed, "run_seed": run_seed, "kind": inst.kind, "d": inst.d,
              "n_iterations": cfg.n_iterations, "n_initial": len(initial_points),
              "sparsity": None if strategy in _MASK_FREE else level,
              "mask": None if strategy in _MASK_FREE or mask is None else mask.to_dict(),
              "reference": reference.to_dict()}
    write_trace(path, trace, header, reference=reference.value)
    log.info("finished %s instance %d", header["label"], instance_idx)


@dataclass
class ExperimentResult:
    output_dir: Path
    trace_paths: list
    aggregate_paths: list
    summary: list


def run_experiment(cfg: ExperimentConfig, reference_cache=None) -> ExperimentResult:
    """Generate the suite, compute references, run every strategy and write reports."""
    cfg.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stored = cfg.to_dict()
    stored.pop("output_dir")
    stored.pop("n_jobs")
    _write_json(out / "config.json", stored)

    suite = InstanceSuite.generate(cfg.benchmark, cfg.d, cfg.n_instances, cfg.n_initial, cfg.seed)
    suite.save(out / "suite.json")
    cache = Path(reference_cache) if reference_cache is not None else out / "references"
    refs = compute_references(suite, cfg, cache, cfg.n_jobs)
    _write_json(out / "references.json", [r.to_dict() for r in refs])

    levels = list(cfg.sparsity_levels) if cfg.sparsity_levels is not None else [None]
    masks: dict[tuple, SparsityMask | None] = {}
    for i in range(cfg.n_instances):
        for level in levels:
            if level is None:
                masks[i, level] = None
                continue
            m = generate_mask(cfg.d, level, derive_seed(cfg.seed, _MASK_KEY, i,
                                                        int(round(level * 1_000_000))))
            masks[i, level] = m
            _write_json(out / "masks" / f"instance_{i:03d}{level_tag(level)}.json", m.to_dict())

    tasks, paths = [], []
    for strategy in cfg.strategies:
        for level in (levels[:1] if strategy in _MASK_FREE else levels):
            label = run_label(strategy, level)
            for i, inst in enumerate(suite.instances):
                path = out / "traces" / label / f"instance_{i:03d}.jsonl"
                paths.append(path)
                tasks.append(delayed(_run_task)(
                    strategy, level, masks[i, level], i, inst, suite.initial_points, refs[i],
                    derive_seed(cfg.seed, _RUN_KEY, i), cfg, path))
    Parallel(n_jobs=cfg.n_jobs)(tasks)
    agg_paths, summary = build_report(out)
    return ExperimentResult(out, paths, agg_paths, summary)


def load_traces(output_dir) -> dict[str, list]:
    """``label -> [(header, trace, raw_records), ...]`` ordered by instance."""
    out = defaultdict(list)
    for d in sorted(p for p in (Path(output_dir) / "traces").iterdir() if p.is_dir()):
        for f in sorted(d.glob("instance_*.jsonl")):
            out[d.name].append(read_trace(f))
    for runs in out.values():
        runs.sort(key=lambda r: r[0]["instance"])
    return dict(out)


def gap_curves(runs) -> np.ndarray:
    """Per-instance relative gap of the best-so-far value, t = 0..T."""
    return np.stack([relative_gap(tr.best_so_far, h["reference"]["value"]) for h, tr, _ in runs])


def stagnation_distances(runs) -> np.ndarray:
    """Hamming distances to the previous proposal, pooled over stagnation iterations."""
    out = []
    for _, tr, _ in runs:
        dist = consecutive_hamming(tr.proposals, tr.initial[-1].point)
        out.extend(dist[i] for i, r in enumerate(tr.records) if r.stagnation)
    return np.asarray(out, dtype=float)


def _series_rows(curves, floor=None) -> list[dict]:
    stats = aggregate(curves)
    rows = []
    for t, (m, s) in enumerate(zip(stats.mean, stats.stderr)):
        row = {"t": t, "mean": float(m), "stderr": float(s), "n": stats.n}
        if floor is not None:
            row["mean_display"] = max(float(m), floor)
        rows.append(row)
    return rows


def build_report(output_dir, floor: float = DISPLAY_FLOOR):
    """Write aggregate curves, the summary table and plot-ready series.

    Returns ``(aggregate_paths, summary_rows)``.
    """
    out = Path(output_dir)
    cfg = json.loads((out / "config.json").read_text())
    runs = load_traces(out)
    agg_paths = []
    curves = {}
    for label, rs in runs.items():
        curves[label] = gap_curves(rs)
        rows = [{"t": r["t"], "mean_gap": r["mean"], "stderr_gap": r["stderr"], "n": r["n"],
                 "mean_gap_display": r["mean_display"]} for r in _series_rows(curves[label], floor)]
        path = out / "aggregate" / f"{label}.csv"
        write_csv(path, rows, ["t", "mean_gap", "stderr_gap", "n", "mean_gap_display"])
        agg_paths.append(path)

    # summary: methods compared against the hybrid at each sparsity level
    levels = cfg["sparsity_levels"] if cfg.get("sparsity_levels") is not None else [None]
    summary = []
    for level in levels:
        group = [run_label(s, level) for s in cfg["strategies"] if run_label(s, level) in curves]
        finals = {m: curves[m][:, -1] for m in group}
        c = {m: curves[m][:, 1:] for m in group}
        ours = run_label(HYBRID, level)
        for row in summary_rows(finals, c, ours):
            row["sparsity"] = "" if level is None else level
            row["compared_to"] = ours if ours in finals and row["method"] != ours else ""
            summary.append(row)
    write_csv(out / "summary.csv", summary,
              ["sparsity", "method", "compared_to", "n_instances", "final_mean_gap",
               "final_stderr_gap", "value_improvement_pct", "iteration_improvement_pct",
               "iteration_improvement_stderr", "success_count"])

    rep = out / "report"
    stag_rows = []
    for label, rs in runs.items():
        props = [relative_gap([r.value for r in tr.records], h["reference"]["value"])
                 for h, tr, _ in rs]
        write_csv(rep / f"{label}_proposal_gap.csv",
                  [dict(r, t=r["t"] + 1) for r in _series_rows(props, floor)],
                  ["t", "mean", "stderr", "n", "mean_display"])
        cons = [consecutive_hamming(tr.proposals, tr.initial[-1].point) for _, tr, _ in rs]
        write_csv(rep / f"{label}_consecutive_hamming.csv",
                  [dict(r, t=r["t"] + 1) for r in _series_rows(cons)], ["t", "mean", "stderr", "n"])
        if all(h["reference"]["minimizer"] is not None for h, _, _ in rs):
            ham = [hamming_to_optimum_series(
                       tr.proposals, ReferenceValue.from_dict(h["reference"]).minimizer)
                   for h, tr, _ in rs]
            write_csv(rep / f"{label}_hamming_to_optimum.csv",
                      [dict(r, t=r["t"] + 1) for r in _series_rows(ham)],
                      ["t", "mean", "stderr", "n"])
        dist = stagnation_distances(rs)
        stag_rows.append({"label": label, "n_stagnation": int(dist.size),
                          "mean_distance": float(dist.mean()) if dist.size else float("nan")})
    write_csv(rep / "stagnation_hamming.csv", stag_rows, ["label", "n_stagnation", "mean_distance"])
    return agg_paths, summary
