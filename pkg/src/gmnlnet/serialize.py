"""JSON file IO with located diagnostics and deterministic report rendering."""
from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np

from .errors import GMNLError


class InputError(GMNLError):
    """Unreadable or malformed input file."""


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: cannot read file: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: JSON parse error: {exc.msg}") from exc


def parse_with(path, builder, what):
    """Build an object from a JSON file; field problems are reported with the file name."""
    data = load_json(path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a JSON object describing a {what}")
    try:
        return builder(data)
    except KeyError as exc:
        raise InputError(f"{path}: {what} is missing field {exc}") from exc
    except (TypeError, ValueError) as exc:  # includes every GMNLError
        raise InputError(f"{path}: invalid {what}: {exc}") from exc


def jsonable(obj):
    """Convert numpy scalars/arrays, fractions and tuples into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float, Fraction)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if hasattr(obj, "to_json"):
        return jsonable(obj.to_json())
    if hasattr(obj, "value") and hasattr(obj, "name"):  # enums
        return obj.value
    return obj


def render(report) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, shortest float repr."""
    return json.dumps(jsonable(report), sort_keys=True, indent=2, ensure_ascii=True) + "\n"
