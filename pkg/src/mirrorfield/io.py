"""Plain-text serialization: '#'-commented CSV tables and JSON reports."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.12e"


def _cell(v) -> str:
    if isinstance(v, (str, bytes)):
        return str(v)
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return FLOAT_FMT % float(v)


def format_csv(columns, rows, meta=(), trailer=()) -> str:
    """Render a table: '#' meta lines, header, rows, '#' trailer lines."""
    lines = [f"# {m}" for m in meta]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    lines.extend(f"# {t}" for t in trailer)
    return "\n".join(lines) + "\n"


def parse_csv(text: str):
    """Inverse of ``format_csv``: returns (columns, float array, comment lines)."""
    comments, body = [], []
    for line in text.splitlines():
        if line.startswith("#"):
            comments.append(line[1:].strip())
        elif line.strip():
            body.append(line)
    if not body:
        raise ValueError("no header row")
    cols = body[0].split(",")
    data = np.array([[float(c) for c in ln.split(",")] for ln in body[1:]], dtype=float)
    return cols, data.reshape(-1, len(cols)), comments


def _jsonable(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    return obj


def to_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_text(path: str | Path | None, text: str) -> None:
    if path is None or str(path) == "-":
        return
    Path(path).write_text(text)
