"""Canonical JSON encoding for results and config files.

Output is deterministic: keys sorted, two-space indent, trailing newline,
no timestamps. Non-finite floats are not valid JSON, so infinities become
the strings "Inf"/"-Inf" and NaN becomes null.
"""

from __future__ import annotations

import json
import math

import numpy as np


def sanitize(obj):
    """Recursively convert to plain JSON-encodable Python values."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "Inf" if value > 0 else "-Inf"
        return value
    return obj


def dumps(obj) -> str:
    return json.dumps(sanitize(obj), sort_keys=True, indent=2) + "\n"


def dump_bytes(obj) -> bytes:
    return dumps(obj).encode("utf-8")
