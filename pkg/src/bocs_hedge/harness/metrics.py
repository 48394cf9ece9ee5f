"""Progress metrics and cross-instance aggregation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..core import pairwise_hamming


def relative_gap(f_best, f_ref: float):
    """``(f_best - f_ref) / |f_ref|``; negative when the reference is beaten."""
    if f_ref == 0:
        raise ZeroDivisionError("relative gap undefined for a zero reference value")
    return (np.asarray(f_best, dtype=float) - f_ref) / abs(f_ref) if np.ndim(f_best) \
        else (float(f_best) - f_ref) / abs(f_ref)


def value_improvement(f_bar_m: float, f_bar_ours: float) -> float:
    """Percent reduction of the final mean gap relative to a baseline."""
    if f_bar_m == 0:
        raise ZeroDivisionError("value improvement undefined for a zero baseline gap")
    return (f_bar_m - f_bar_ours) / f_bar_m * 100.0


def first_reach(gaps, target: float) -> int | None:
    """1-based iteration at which ``gaps`` (entries for t = 1..T) first reaches ``target``."""
    hits = np.flatnonzero(np.asarray(gaps, dtype=float) <= target)
    return int(hits[0]) + 1 if hits.size else None


def iteration_improvement(gaps, target: float, T: int) -> float:
    """``(1 - T_r / T) * 100`` where ``T_r`` is the first iteration with gap <= target, else 0."""
    gaps = np.asarray(gaps, dtype=float)
    if gaps.shape != (T,):
        raise ValueError(f"expected {T} gap entries, got {gaps.shape}")
    t_r = first_reach(gaps, target)
    return 0.0 if t_r is None else (1.0 - t_r / T) * 100.0


@dataclass
class AggregateStats:
    mean: np.ndarray
    stderr: np.ndarray
    n: int


def aggregate(sequences) -> AggregateStats:
    """Elementwise mean and standard error (sample sd / sqrt(n)) across instances."""
    arr = [np.asarray(s, dtype=float) for s in sequences]
    if not arr:
        raise ValueError("nothing to aggregate")
    if len({a.shape for a in arr}) != 1:
        raise ValueError("all sequences must have the same length")
    A = np.stack(arr)
    n = A.shape[0]
    if n == 1:
        warnings.warn("standard error with a single instance is reported as 0", RuntimeWarning,
                      stacklevel=2)
        return AggregateStats(A[0].copy(), np.zeros(A.shape[1]), 1)
    return AggregateStats(A.mean(axis=0), A.std(axis=0, ddof=1) / np.sqrt(n), n)


def hamming_to_optimum_series(proposals, minimizer) -> np.ndarray:
    """Hamming distance of each proposed point to the known optimum."""
    if minimizer is None:
        raise ValueError("minimizer unavailable (reference was not exhaustive)")
    P = np.asarray(proposals)
    if P.size == 0:
        return np.zeros(0, dtype=np.int64)
    return pairwise_hamming(P, np.asarray(minimizer)[None, :])[:, 0]


def consecutive_hamming(proposals, previous=None) -> np.ndarray:
    """Distance between each proposal and the one before it.

    The first entry compares against ``previous`` (e.g. the last initial
    point) or is NaN when ``previous`` is None.
    """
    P = np.asarray(proposals, dtype=np.int64)
    out = np.full(len(P), np.nan)
    if len(P) > 1:
        out[1:] = np.count_nonzero(P[1:] != P[:-1], axis=1)
    if len(P) and previous is not None:
        out[0] = np.count_nonzero(P[0] != np.asarray(previous))
    return out


def summary_rows(final_gaps: dict, gap_curves: dict, ours: str) -> list[dict]:
    """Final-gap / value-improvement / iteration-improvement rows per method.

    ``final_gaps[m]`` holds per-instance final gaps; ``gap_curves[m]`` per-instance
    gap sequences over t = 1..T (same instance order for all methods).
    """
    rows = []
    ours_final = np.asarray(final_gaps[ours]) if ours in final_gaps else None
    for m, finals in final_gaps.items():
        finals = np.asarray(finals, dtype=float)
        n = finals.size
        row = {"method": m, "n_instances": n, "final_mean_gap": float(finals.mean()),
               "final_stderr_gap": float(finals.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
               "value_improvement_pct": float("nan"), "iteration_improvement_pct": float("nan"),
               "iteration_improvement_stderr": float("nan"), "success_count": ""}
        if ours_final is not None and m != ours:
            try:
                row["value_improvement_pct"] = value_improvement(finals.mean(), ours_final.mean())
            except ZeroDivisionError:
                pass
            curves = gap_curves[ours]
            T = len(curves[0])
            imps = [iteration_improvement(c, target, T) for c, target in zip(curves, finals)]
            reached = [first_reach(c, target) is not None for c, target in zip(curves, finals)]
            row["iteration_improvement_pct"] = float(np.mean(imps))
            row["iteration_improvement_stderr"] = (float(np.std(imps, ddof=1) / np.sqrt(n))
                                                   if n > 1 else 0.0)
            row["success_count"] = f"{sum(reached)}/{n}"
        rows.append(row)
    return rows
