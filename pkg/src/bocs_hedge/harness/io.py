"""Line-delimited JSON traces and CSV tables."""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from ..core import Observation, bits_to_string, string_to_bits
from ..strategies import IterationRecord, RunTrace


def _dump(obj) -> str:
    return json.dumps(obj, allow_nan=False)


def write_trace(path, trace: RunTrace, header: dict, reference: float | None = None) -> None:
    """One header line, one line per initial point, one line per iteration."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [_dump({"record": "header", **header})]
    for o in trace.initial:
        lines.append(_dump({"record": "initial", "t": 0, "bits": bits_to_string(o.point),
                            "value": o.value}))
    best = trace.best_so_far
    for r, b in zip(trace.records, best[1:]):
        rec = {"record": "iteration", "t": r.t, "bits": bits_to_string(r.point), "value": r.value,
               "source": r.source, "stagnation": r.stagnation, "fallback": r.fallback,
               "arm": r.arm, "flips": r.flips, "rewards": r.rewards, "gamma": r.gamma,
               "best": float(b)}
        if reference is not None:
            rec["gap"] = (float(b) - reference) / abs(reference)
        lines.append(_dump(rec))
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)


def read_trace(path):
    """Return ``(header, trace, stored_iteration_records)``."""
    header, initial, records, raw = None, [], [], []
    with open(path) as fh:
        for line in fh:
            rec = json.loads(line)
            kind = rec.pop("record")
            if kind == "header":
                header = rec
            elif kind == "initial":
                initial.append(Observation(string_to_bits(rec["bits"]), rec["value"]))
            else:
                raw.append(rec)
                records.append(IterationRecord(
                    rec["t"], string_to_bits(rec["bits"]), rec["value"], rec["source"],
                    rec["stagnation"], rec["fallback"], rec["arm"], rec["flips"], rec["rewards"],
                    rec["gamma"]))
    if header is None:
        raise ValueError(f"{path}: missing header record")
    trace = RunTrace(header["strategy"], header.get("instance"), initial, records)
    return header, trace, raw


def write_csv(path, rows: list[dict], columns: list[str]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row.get(k, "")) for k in columns})
    os.replace(tmp, path)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
