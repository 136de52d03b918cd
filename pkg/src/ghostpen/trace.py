"""Flat CSV traces with a JSON sidecar.

Floats are written with ``repr`` so a trace read back from disk is bitwise
identical to the in-memory records. Vector fields expand into one column per
component (``x_1 .. x_n``, ``d_1 .. d_n``, ``xi_1 .. xi_m``).
"""

from __future__ import annotations

import csv
import json
from dataclasses import fields
from pathlib import Path

import numpy as np

from .drivers import DriverState, IterationRecord
from .problem import ProblemConstants, SolverConfig

SCHEMA = 1
VECTOR_FIELDS = {"x": "n", "d": "n", "xi": "m"}
INT_FIELDS = {"nu", "kernel_iters", "w_evals"}
OPTIONAL_FIELDS = {"T", "W_T"}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def trace_columns(n: int, m: int) -> list[str]:
    cols = []
    for f in fields(IterationRecord):
        if f.name in VECTOR_FIELDS:
            k = n if VECTOR_FIELDS[f.name] == "n" else m
            cols.extend(f"{f.name}_{i + 1}" for i in range(k))
        else:
            cols.append(f.name)
    return cols


def write_trace_csv(path, records: list[IterationRecord], n: int, m: int) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trace_columns(n, m))
        for r in records:
            row = []
            for f in fields(IterationRecord):
                v = getattr(r, f.name)
                if f.name in VECTOR_FIELDS:
                    row.extend(_fmt(t) for t in np.asarray(v, dtype=float))
                elif f.name == "events":
                    row.append(";".join(v))
                else:
                    row.append(_fmt(v))
            w.writerow(row)
    return path


def read_trace_csv(path) -> list[IterationRecord]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        kw = {}
        for f in fields(IterationRecord):
            name = f.name
            if name in VECTOR_FIELDS:
                keys = sorted((k for k in row if k.startswith(name + "_") and k[len(name) + 1 :].isdigit()), key=lambda k: int(k.rsplit("_", 1)[1]))
                kw[name] = np.array([float(row[k]) for k in keys])
            elif name == "events":
                kw[name] = tuple(e for e in row[name].split(";") if e)
            elif name in INT_FIELDS:
                kw[name] = int(row[name])
            elif name in OPTIONAL_FIELDS and row[name] == "":
                kw[name] = None
            else:
                kw[name] = float(row[name])
        out.append(IterationRecord(**kw))
    return out


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(t) for k, t in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(t) for t in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(t) for t in v.tolist()]
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def sidecar_dict(state: DriverState, cfg: SolverConfig, problem_file: str | None = None, extra: dict | None = None) -> dict:
    doc = {
        "schema": SCHEMA,
        "problem": state.problem,
        "problem_file": problem_file,
        "algorithm": state.algorithm,
        "config": cfg.to_dict(),
        "termination": state.termination,
        "iterations": state.iterations,
        "w_evals": state.w_evals,
        "halvings": state.halvings,
        "final_T": state.T,
        "info": state.info,
        "constants": state.constants.to_dict() if state.constants is not None else None,
    }
    if extra:
        doc.update(extra)
    return _jsonable(doc)


def write_run(out_dir, state: DriverState, cfg: SolverConfig, n: int, m: int, problem_file: str | None = None, stem: str | None = None, extra: dict | None = None) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and ``<stem>.json``; returns both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or f"{state.problem}_algo{state.algorithm}"
    csv_path = write_trace_csv(out / f"{stem}.csv", state.trace, n, m)
    doc = sidecar_dict(state, cfg, problem_file, extra)
    doc["trace_file"] = csv_path.name
    json_path = out / f"{stem}.json"
    json_path.write_text(json.dumps(doc, indent=2, allow_nan=True))
    return csv_path, json_path


def load_run(json_path):
    """Read a sidecar and its trace: (sidecar dict, records, config, constants or None)."""
    json_path = Path(json_path)
    doc = json.loads(json_path.read_text())
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"unsupported trace schema {doc.get('schema')!r}")
    records = read_trace_csv(json_path.parent / doc["trace_file"])
    cfg = SolverConfig(**doc["config"])
    k = doc.get("constants")
    constants = ProblemConstants.from_dict(k) if k else None
    return doc, records, cfg, constants


def finite_record(r: IterationRecord) -> bool:
    """Every numeric field finite (optional fields may be absent)."""
    for f in fields(IterationRecord):
        v = getattr(r, f.name)
        if f.name == "events" or v is None:
            continue
        if not np.all(np.isfinite(np.asarray(v, dtype=float))):
            return False
    return True


__all__ = [
    "SCHEMA",
    "trace_columns",
    "write_trace_csv",
    "read_trace_csv",
    "write_run",
    "load_run",
    "sidecar_dict",
    "finite_record",
]
