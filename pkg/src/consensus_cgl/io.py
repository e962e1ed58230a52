"""Plain-text numeric I/O shared by the graph, snapshot and solution writers.

Dense matrices are stored as headerless CSV, row-major, with 17 significant
digits so that a write/read round trip is bit-exact for float64.
"""
from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .errors import ParseError, SchemaError

FLOAT_FMT = "%.17g"


def write_matrix_csv(path, matrix):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for row in matrix:
            fh.write(",".join(FLOAT_FMT % v for v in row))
            fh.write("\n")


def read_matrix_csv(path, skip_header=False):
    """Read a dense real matrix; raises ParseError naming the offending line."""
    rows = []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, record in enumerate(reader, start=1):
            if skip_header and lineno == 1:
                continue
            if not record or all(not c.strip() for c in record):
                continue
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise ParseError(
                    f"{path}: expected {width} columns, found {len(record)}",
                    line=lineno,
                )
            try:
                rows.append([float(c) for c in record])
            except ValueError:
                for col, c in enumerate(record, start=1):
                    try:
                        float(c)
                    except ValueError:
                        raise ParseError(
                            f"{path}: cannot parse {c!r} as a number",
                            line=lineno,
                            column=col,
                        ) from None
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    out = np.array(rows, dtype=float)
    if not np.all(np.isfinite(out)):
        raise ParseError(f"{path}: non-finite entries")
    return out


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc.msg}", line=exc.lineno, column=exc.colno) from None


def read_config(path):
    """Load a JSON or TOML mapping, chosen by file extension."""
    path = os.fspath(path)
    if path.endswith(".toml"):
        import tomli

        with open(path, "rb") as fh:
            try:
                return tomli.load(fh)
            except tomli.TOMLDecodeError as exc:
                raise ParseError(f"{path}: {exc}") from None
    return read_json(path)


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
