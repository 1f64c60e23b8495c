"""CSV tables with a JSON metadata sidecar."""

from __future__ import annotations

import csv
import json
import os
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


def format_value(x) -> str:
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else str(x.numerator)
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.random.SeedSequence):
        return obj.entropy
    return obj


def sidecar_path(path: str | os.PathLike) -> Path:
    return Path(path).with_suffix(".json")


def write_table(
    path: str | os.PathLike,
    header: Sequence[str],
    rows,
    meta: Mapping | None = None,
) -> Path:
    """Write ``rows`` as CSV (17 significant digits) plus ``<stem>.json`` metadata."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(header))
        for row in rows:
            w.writerow([format_value(x) for x in row])
    side = sidecar_path(path)
    with open(side, "w") as fh:
        json.dump(jsonable({"columns": list(header), **(meta or {})}), fh, indent=2, sort_keys=True)
    return side


def read_table(path: str | os.PathLike) -> tuple[list[str], np.ndarray]:
    """Read a numeric table written by :func:`write_table`."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = [[float(Fraction(x)) if "/" in x else float(x) for x in row] for row in r]
    return header, np.array(data, dtype=float).reshape(len(data), len(header))
