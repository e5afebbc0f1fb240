"""JSON exchange formats.

Complex matrices are row-major nested lists of ``[re, im]`` pairs. Floats
are written with ``repr`` precision by :mod:`json`, so a save/load cycle
is bit-exact.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .channel import ChannelRealization, SystemConfig
from .design import DesignSolution
from .errors import ContractViolation

__all__ = [
    "matrix_to_json",
    "matrix_from_json",
    "channel_to_dict",
    "channel_from_dict",
    "save_channel",
    "load_channel",
    "solution_to_dict",
]


def matrix_to_json(m) -> list:
    a = np.atleast_2d(np.asarray(m, dtype=np.complex128))
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def matrix_from_json(obj, name: str = "matrix") -> np.ndarray:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise ContractViolation(f"{name}: expected a non-empty list of rows")
    width = len(obj[0])
    out = np.empty((len(obj), width), dtype=np.complex128)
    for i, row in enumerate(obj):
        if len(row) != width:
            raise ContractViolation(f"{name}: row {i} has {len(row)} entries, expected {width}")
        for j, z in enumerate(row):
            if not (isinstance(z, list) and len(z) == 2 and all(isinstance(v, (int, float)) for v in z)):
                raise ContractViolation(f"{name}[{i}][{j}]: expected [re, im]")
            out[i, j] = complex(z[0], z[1])
    if not np.all(np.isfinite(out)):
        raise ContractViolation(f"{name}: non-finite entry")
    return out


def channel_to_dict(ch: ChannelRealization) -> dict:
    return {
        "n_r": ch.n_r,
        "H1": matrix_to_json(ch.H1),
        "H2": matrix_to_json(ch.H2),
        "G1": matrix_to_json(ch.G1),
        "G2": matrix_to_json(ch.G2),
    }


def channel_from_dict(doc: dict, n_r: int | None = None) -> ChannelRealization:
    if not isinstance(doc, dict):
        raise ContractViolation("channel document must be a JSON object")
    missing = [k for k in ("H1", "H2", "G1", "G2") if k not in doc]
    if missing:
        raise ContractViolation(f"channel document lacks field(s): {', '.join(missing)}")
    n_r = doc.get("n_r", n_r)
    if not isinstance(n_r, int) or n_r < 1:
        raise ContractViolation("channel document needs a positive integer 'n_r'")
    mats = {k: matrix_from_json(doc[k], k) for k in ("H1", "H2", "G1", "G2")}
    return ChannelRealization(n_r=n_r, **mats)


def save_channel(ch: ChannelRealization, path) -> None:
    Path(path).write_text(json.dumps(channel_to_dict(ch)) + "\n")


def load_channel(path, n_r: int | None = None) -> ChannelRealization:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ContractViolation(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return channel_from_dict(doc, n_r)


def solution_to_dict(sol: DesignSolution, cfg: SystemConfig | None = None, extra: dict | None = None) -> dict:
    doc = {
        "P1": matrix_to_json(sol.P1),
        "P2": matrix_to_json(sol.P2),
        "B1": matrix_to_json(sol.B1),
        "B2": matrix_to_json(sol.B2),
        "F": [matrix_to_json(Fk) for Fk in sol.F_blocks],
        "D1": matrix_to_json(sol.D1),
        "D2": matrix_to_json(sol.D2),
    }
    for name in ("Omega1", "Omega2", "Delta1", "Delta2", "Q1", "Q2"):
        val = getattr(sol, name)
        if val is not None:
            doc[name] = matrix_to_json(val)
    for i, alloc in ((1, sol.alloc1), (2, sol.alloc2)):
        if alloc is not None:
            doc[f"allocation{i}"] = {
                "z": [float(v) for v in alloc.z],
                "w": [float(v) for v in alloc.w],
                "objective": alloc.objective,
                "iterations": alloc.iterations,
                "converged": alloc.converged,
            }
    if cfg is not None:
        doc["config"] = cfg.to_dict()
    doc["meta"] = {k: v for k, v in sol.meta.items() if k != "mse_trace"}
    if extra:
        doc.update(extra)
    return doc
