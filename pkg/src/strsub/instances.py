"""JSON instance files.

Every file is an object with ``schema_version`` (currently 1) and ``model``:

task_assignment
    ``n``, ``m``, ``K``; ``L`` and ``U`` as ``[subtask][agent]``; ``p`` as
    ``[subtask][stage][agent]`` nested lists or one flat row-major list.
adaptive_measurement
    ``K``; ``sigma_sq`` with K positive entries; ``e_grid`` either an
    explicit sorted list in [0.5, 1] or ``{"count": c, "min": 0.5, "max": 1.0}``.
table
    ``alphabet_size``, ``K``; ``values`` as a list of
    ``{"string": [...], "value": v}``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .adaptive_measurement import MeasurementInstance, uniform_grid
from .core import TableOracle
from .task_assignment import TaskAssignmentInstance

SCHEMA_VERSION = 1
MODELS = ("task_assignment", "adaptive_measurement", "table")


class ParseError(ValueError):
    pass


def _field(doc, name, where, kind=None):
    if name not in doc:
        raise ParseError(f"{where}: missing field '{name}'")
    v = doc[name]
    if kind is int and (not isinstance(v, int) or isinstance(v, bool) or v < 1):
        raise ParseError(f"{where}: field '{name}' must be a positive integer, got {v!r}")
    return v


def _array(value, shape, name, where):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: field '{name}' is not numeric: {exc}") from None
    if arr.size != int(np.prod(shape)):
        raise ParseError(f"{where}: field '{name}' has {arr.size} entries, expected shape {shape}")
    if arr.shape != tuple(shape) and arr.ndim != 1:
        raise ParseError(f"{where}: field '{name}' has shape {arr.shape}, expected {shape}")
    return arr.reshape(shape)


def instance_from_dict(doc: dict, where: str = "<instance>"):
    """Return ``(model, instance)``; ``instance`` is a TableOracle for tables."""
    if not isinstance(doc, dict):
        raise ParseError(f"{where}: top level must be an object")
    version = _field(doc, "schema_version", where)
    if version != SCHEMA_VERSION:
        raise ParseError(f"{where}: unsupported schema_version {version!r}")
    model = _field(doc, "model", where)
    try:
        if model == "task_assignment":
            n = _field(doc, "n", where, int)
            m = _field(doc, "m", where, int)
            K = _field(doc, "K", where, int)
            p = _array(_field(doc, "p", where), (n, K, m), "p", where)
            L = _array(_field(doc, "L", where), (n, m), "L", where)
            U = _array(_field(doc, "U", where), (n, m), "U", where)
            return model, TaskAssignmentInstance(p, L, U)
        if model == "adaptive_measurement":
            K = _field(doc, "K", where, int)
            sig = _field(doc, "sigma_sq", where)
            if not isinstance(sig, list) or len(sig) != K:
                raise ParseError(f"{where}: field 'sigma_sq' must list exactly K={K} variances")
            grid = _field(doc, "e_grid", where)
            if isinstance(grid, dict):
                count = _field(grid, "count", f"{where}: e_grid", int)
                grid = uniform_grid(count, float(grid.get("min", 0.5)), float(grid.get("max", 1.0)))
            elif not isinstance(grid, list):
                raise ParseError(f"{where}: field 'e_grid' must be a list or a count/min/max object")
            return model, MeasurementInstance(tuple(sig), tuple(grid))
        if model == "table":
            m = _field(doc, "alphabet_size", where, int)
            K = _field(doc, "K", where, int)
            entries = _field(doc, "values", where)
            if not isinstance(entries, list):
                raise ParseError(f"{where}: field 'values' must be a list")
            table = {}
            for idx, e in enumerate(entries):
                loc = f"{where}: values[{idx}]"
                if not isinstance(e, dict):
                    raise ParseError(f"{loc}: entry must be an object")
                s = tuple(_field(e, "string", loc))
                if s in table:
                    raise ParseError(f"{loc}: duplicate string {list(s)}")
                table[s] = float(_field(e, "value", loc))
            return model, TableOracle(table, m, K)
    except ParseError:
        raise
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: {exc}") from None
    raise ParseError(f"{where}: unknown model {model!r}; expected one of {', '.join(MODELS)}")


def load_instance(path: str | Path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read instance file ({exc.strerror})") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return instance_from_dict(doc, str(path))


def instance_to_dict(model: str, inst) -> dict:
    if model == "task_assignment":
        return {
            "schema_version": SCHEMA_VERSION,
            "model": model,
            "n": inst.n,
            "m": inst.m,
            "K": inst.K,
            "L": inst.L.tolist(),
            "U": inst.U.tolist(),
            "p": inst.p.tolist(),
        }
    if model == "adaptive_measurement":
        return {
            "schema_version": SCHEMA_VERSION,
            "model": model,
            "K": inst.K,
            "sigma_sq": list(inst.sigma_sq),
            "e_grid": list(inst.e_grid),
        }
    if model == "table":
        entries = [{"string": list(k), "value": v} for k, v in sorted(inst.table.items(), key=lambda kv: (len(kv[0]), kv[0])) if k]
        return {
            "schema_version": SCHEMA_VERSION,
            "model": model,
            "alphabet_size": inst.alphabet_size,
            "K": inst.horizon,
            "values": entries,
        }
    raise ValueError(f"unknown model {model!r}")


def dump_instance(model: str, inst) -> str:
    return json.dumps(instance_to_dict(model, inst), indent=2) + "\n"
