"""Command-line entry point: ``bocs-hedge {generate,reference,run,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import MISSING, fields
from pathlib import Path

from .benchgen import InstanceSuite
from .harness.config import ExperimentConfig
from .harness.experiment import DISPLAY_FLOOR, build_report, compute_references, run_experiment

_LIST_TYPES = {"strategies": str, "sparsity_levels": float, "kappas": float}
_SCALAR_TYPES = {"seed": int}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    for f in fields(ExperimentConfig):
        if f.name == "seed":
            continue
        kw = {"dest": f.name, "default": None}
        if f.name in _LIST_TYPES:
            kw.update(nargs="+", type=_LIST_TYPES[f.name])
        else:
            default = f.default if f.default is not MISSING else None
            kw["type"] = _SCALAR_TYPES.get(f.name, type(default) if default is not None else str)
        p.add_argument(_flag(f.name), **kw)


def _config_from_args(args) -> ExperimentConfig:
    base = ExperimentConfig.load(args.config).to_dict() if args.config else {}
    for f in fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            base[f.name] = v
    return ExperimentConfig.from_dict(base)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bocs-hedge",
                                     description="Binary black-box optimization benchmarks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a QUBO/HUBO instance suite")
    g.add_argument("--benchmark", choices=["qubo", "hubo"], default="qubo")
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--n-instances", type=int, default=50)
    g.add_argument("--n-initial", type=int, default=50)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", type=Path, required=True, help="suite JSON file")

    r = sub.add_parser("reference", help="compute reference values for a suite")
    r.add_argument("--suite", type=Path, required=True)
    r.add_argument("--reference-mode", choices=["auto", "exhaustive", "sa"], default="auto")
    r.add_argument("--reference-sa-runs", type=int, default=1000)
    r.add_argument("--sa-sweeps", type=int, default=1000)
    r.add_argument("--sa-t-final-ratio", type=float, default=1e-3)
    r.add_argument("--exhaustive-max-dim", type=int, default=25)
    r.add_argument("--cache-dir", type=Path, default=None)
    r.add_argument("--n-jobs", type=int, default=1)
    r.add_argument("--out", type=Path, required=True, help="references JSON file")

    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("--config", type=Path, default=None, help="YAML or JSON config file")
    run.add_argument("--seed", type=int, required=True)
    run.add_argument("--reference-cache", type=Path, default=None)
    _add_config_flags(run)

    rep = sub.add_parser("report", help="recompute tables and plot data from traces")
    rep.add_argument("--output-dir", type=Path, required=True)
    rep.add_argument("--floor", type=float, default=DISPLAY_FLOOR,
                     help="lower clamp for log-scale display columns")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "generate":
            suite = InstanceSuite.generate(args.benchmark, args.d, args.n_instances,
                                           args.n_initial, args.seed)
            args.out.parent.mkdir(parents=True, exist_ok=True)
            suite.save(args.out)
        elif args.command == "reference":
            suite = InstanceSuite.load(args.suite)
            cfg = ExperimentConfig(d=suite.d, reference_mode=args.reference_mode,
                                   reference_sa_runs=args.reference_sa_runs,
                                   sa_sweeps=args.sa_sweeps, sa_t_final_ratio=args.sa_t_final_ratio,
                                   exhaustive_max_dim=args.exhaustive_max_dim)
            refs = compute_references(suite, cfg, args.cache_dir, args.n_jobs)
            args.out.parent.mkdir(parents=True, exist_ok=True)
            args.out.write_text(json.dumps(
                [dict(r.to_dict(), instance=i, seed=s)
                 for i, (r, s) in enumerate(zip(refs, suite.seeds))], indent=1) + "\n")
        elif args.command == "run":
            cfg = _config_from_args(args)
            result = run_experiment(cfg, reference_cache=args.reference_cache)
            print(f"wrote {len(result.trace_paths)} traces to {result.output_dir}")
        else:
            build_report(args.output_dir, floor=args.floor)
    except (ValueError, FileNotFoundError) as exc:
        print(f"bocs-hedge: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
