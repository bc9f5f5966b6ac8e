"""CSV matrix files and JSON reports.

Matrix CSVs are RFC-4180-compatible: comma-delimited by default, '.' as the
decimal point, UTF-8, numeric body, optionally one header row. Floats are
written with shortest round-trip formatting, so write-then-read reproduces
every entry bit-exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .exceptions import InputError
from .linalg import as_matrix


def format_float(value: float) -> str:
    """Shortest decimal string that round-trips to the same float."""
    return repr(float(value))


def read_matrix_csv(path, has_header: bool = False, delimiter: str = ","):
    """Read a numeric matrix from a CSV file.

    Returns
    -------
    (matrix, header)
        ``header`` is the list of column names when ``has_header`` is set,
        otherwise None.

    Raises
    ------
    InputError
        On unreadable files, ragged rows, or non-numeric/non-finite cells.
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh, delimiter=delimiter) if row]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    header = None
    if has_header:
        if not rows:
            raise InputError(f"{path}: expected a header row but the file is empty")
        header = rows[0]
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: no data rows")
    width = len(rows[0])
    data = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InputError(f"{path}: row {i + 1} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            try:
                data[i, j] = float(cell)
            except ValueError as exc:
                raise InputError(f"{path}: row {i + 1}, column {j + 1}: not a number: {cell!r}") from exc
    if not np.isfinite(data).all():
        raise InputError(f"{path}: matrix contains non-finite entries")
    return data, header


def write_matrix_csv(path, x, header=None, delimiter: str = ",") -> None:
    """Write a matrix (or an empty basis) as CSV with round-trip floats."""
    arr = np.asarray(x, dtype=float)
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header is not None:
            fh.write(delimiter.join(str(h) for h in header) + "\r\n")
        if arr.size == 0:
            return
        arr2 = as_matrix(arr)
        for row in arr2:
            fh.write(delimiter.join(format_float(v) for v in row) + "\r\n")


def write_json(path, payload) -> None:
    """Serialize a report with stable key order and a trailing newline."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def dumps_json(payload) -> str:
    return json.dumps(payload, indent=2) + "\n"


def write_results_csv(path, rows, columns) -> None:
    """Write long-format benchmark rows (dicts) under a fixed column order."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\r\n")
        for row in rows:
            fields = []
            for col in columns:
                value = row[col]
                fields.append(format_float(value) if isinstance(value, float) else str(value))
            fh.write(",".join(fields) + "\r\n")
