"""CSV and JSON helpers. Floats are written with ``repr`` so they parse back exactly."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(target, columns: dict):
    """Write equal-length columns. ``target`` is a path or a text stream."""
    names = list(columns)
    cols = [np.asarray(columns[n]).tolist() if isinstance(columns[n], np.ndarray) else list(columns[n]) for n in names]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("columns have different lengths")
    own = not hasattr(target, "write")
    fh = open(target, "w", newline="") if own else target
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(n):
            w.writerow([_fmt(c[i]) for c in cols])
    finally:
        if own:
            fh.close()


def write_rows(target, rows: list[dict]):
    if not rows:
        raise ValueError("no rows to write")
    write_csv(target, {k: [r[k] for r in rows] for k in rows[0]})


def read_csv(path) -> dict:
    """Columns as lists of floats where possible, strings otherwise."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [row for row in reader if row]
    out = {}
    for j, name in enumerate(header):
        vals = [r[j] for r in data]
        try:
            out[name] = np.array([float(v) for v in vals])
        except ValueError:
            out[name] = vals
    return out


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dump_json(obj, target=None):
    text = json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"
    if target is None:
        sys.stdout.write(text)
    else:
        Path(target).write_text(text)
    return text
