"""Canonical JSON serialization for reports."""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

import numpy as np

from . import __version__


def _default(obj: Any) -> Any:
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(doc: Any) -> str:
    """Sorted-key JSON; floats use the shortest repr that round-trips exactly."""
    return json.dumps(doc, sort_keys=True, indent=2, default=_default) + "\n"


def envelope(command: str, config: dict[str, Any], result: dict[str, Any], passed: bool) -> dict[str, Any]:
    return {
        "command": command,
        "config": config,
        "passed": bool(passed),
        "result": result,
        "version": __version__,
    }
