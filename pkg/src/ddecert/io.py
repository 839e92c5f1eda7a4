"""System files and report writers.

System files are JSON::

    {"B": [[...]],
     "kernel": {"atoms": [{"delay": -1.0, "matrix": [[...]]}],
                "density": {"breakpoints": [-1.0, 0.0],
                            "pieces": [{"coeffs": [[[...]]]}]}}}

Reports are written with a small dedicated emitter so that every float is
printed with 17 significant digits and repeated runs are byte-identical.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .kernel import DelayAtom, DelayDensity, DelayKernel, LinearDelaySystem

__all__ = [
    "SystemFileError",
    "parse_system",
    "load_system",
    "system_to_dict",
    "format_float",
    "dumps_report",
    "write_report",
    "write_csv",
]


class SystemFileError(ValueError):
    """Malformed or inconsistent system description."""


def _matrix(value, where):
    try:
        m = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SystemFileError(f"{where}: not a numeric matrix") from exc
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise SystemFileError(f"{where}: expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise SystemFileError(f"{where}: non-finite entries")
    return m


def parse_system(data: dict) -> LinearDelaySystem:
    """Build a system from already-decoded JSON data."""
    if not isinstance(data, dict) or "B" not in data:
        raise SystemFileError("system must be an object with key 'B'")
    B = _matrix(data["B"], "B")
    n = B.shape[0]
    kern = data.get("kernel") or {}
    if not isinstance(kern, dict):
        raise SystemFileError("'kernel' must be an object")
    atoms = []
    for i, a in enumerate(kern.get("atoms") or []):
        try:
            delay = float(a["delay"])
            mat = a["matrix"]
        except (KeyError, TypeError, ValueError) as exc:
            raise SystemFileError(f"atom {i}: needs numeric 'delay' and 'matrix'") from exc
        if not (-1.0 <= delay <= 0.0):
            raise SystemFileError(f"atom {i}: delay {delay!r} outside [-1, 0]")
        m = _matrix(mat, f"atom {i} matrix")
        if m.shape[0] != n:
            raise SystemFileError(f"atom {i}: matrix is {m.shape[0]}x{m.shape[0]}, B is {n}x{n}")
        atoms.append(DelayAtom(delay, m))
    density = None
    dens = kern.get("density")
    if dens is not None:
        try:
            bp = [float(v) for v in dens["breakpoints"]]
            pieces = [np.array(p["coeffs"], dtype=float) for p in dens["pieces"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise SystemFileError("density needs 'breakpoints' and 'pieces' with 'coeffs'") from exc
        for i, p in enumerate(pieces):
            if p.ndim < 2 or p.shape[-2:] != (n, n):
                raise SystemFileError(f"density piece {i}: coefficient shape {p.shape} "
                                      f"does not match dimension {n}")
        try:
            density = DelayDensity(np.array(bp), tuple(pieces))
        except ValueError as exc:
            raise SystemFileError(f"density: {exc}") from exc
    try:
        return LinearDelaySystem(B, DelayKernel(tuple(atoms), density, n))
    except ValueError as exc:
        raise SystemFileError(str(exc)) from exc


def load_system(path) -> LinearDelaySystem:
    """Read a system file; JSON syntax errors report line and column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SystemFileError(f"{path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SystemFileError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_system(data)


def system_to_dict(system: LinearDelaySystem) -> dict:
    out = {"B": system.drift.tolist(), "kernel": {"atoms": [
        {"delay": a.location, "matrix": a.matrix.tolist()} for a in system.kernel.atoms]}}
    d = system.kernel.density
    if d is not None:
        out["kernel"]["density"] = {"breakpoints": d.breakpoints.tolist(),
                                    "pieces": [{"coeffs": p.tolist()} for p in d.pieces]}
    return out


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    return s if any(ch in s for ch in ".en") else s + ".0"


def _emit(obj, indent, level, out):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(f"{pad}{json.dumps(str(k))}: ")
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in items):
            parts = []
            for v in items:
                _emit(v, indent, level + 1, parts)
                parts.append(", ")
            out.append("[" + "".join(parts[:-1]) + "]")
            return
        out.append("[\n")
        for i, v in enumerate(items):
            out.append(pad)
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_report(obj, indent: int = 2) -> str:
    out = []
    _emit(obj, indent, 0, out)
    return "".join(out) + "\n"


def write_report(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_report(obj))
    return path


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(v) if isinstance(v, (float, np.floating))
                              else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path
