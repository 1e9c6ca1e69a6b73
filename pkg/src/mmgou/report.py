"""Report emission: JSON (machine) and CSV (analysis) with identical numbers.

JSON uses sorted keys and Python's shortest-roundtrip float representation, so
identical results serialize to identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def jsonable(obj):
    """Recursively convert report objects to plain JSON-serializable data.

    Non-finite floats become null: they mark unavailable diagnostics and JSON
    has no representation for them.
    """
    if isinstance(obj, (float, np.floating)):
        val = float(obj)
        return val if math.isfinite(val) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [jsonable(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(x) for x in obj]
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    return str(obj)


def write_json(path, payload: dict) -> None:
    text = json.dumps(jsonable(payload), sort_keys=True, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def write_csv(path, header, rows) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(x) for x in row])


def _csv_cell(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def flatten_for_csv(payload: dict, prefix: str = "") -> list:
    """Depth-first (key, value) rows for scalar leaves of a report."""
    rows = []
    for key in sorted(payload):
        val = payload[key]
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            rows.extend(flatten_for_csv(val, prefix=f"{name}."))
        elif isinstance(val, (list, tuple)):
            for idx, item in enumerate(val):
                if isinstance(item, dict):
                    rows.extend(flatten_for_csv(item, prefix=f"{name}[{idx}]."))
                else:
                    rows.append((f"{name}[{idx}]", item))
        else:
            rows.append((name, val))
    return rows
