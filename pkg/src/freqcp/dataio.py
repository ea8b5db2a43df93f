"""Reading and writing single-column series as delimited text."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from freqcp.spectral import MIN_LENGTH, SeriesError


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_series(path, column=None) -> np.ndarray:
    """Load one column of a comma-separated file.

    An optional first line is treated as a header when its selected cell
    is not numeric.  ``column`` is a header name or a 0-based index
    (default: first column).  Blank or non-numeric rows inside the data
    raise :class:`SeriesError` naming the 1-based line number.
    """
    path = Path(path)
    if not path.is_file():
        raise SeriesError(f"{path}: no such file")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    while rows and not any(cell.strip() for cell in rows[-1]):
        rows.pop()
    if not rows:
        raise SeriesError(f"{path}: file is empty")

    index = 0
    start = 0
    header = [cell.strip() for cell in rows[0]]
    has_header = not all(_is_number(c) for c in header if c)
    if has_header:
        start = 1
    if isinstance(column, str) and not column.isdigit():
        if not has_header:
            raise SeriesError(f"{path}: column {column!r} requested but the file has no header")
        if column not in header:
            raise SeriesError(f"{path}: no column named {column!r} (have {header})")
        index = header.index(column)
    elif column is not None:
        index = int(column)

    values = []
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if not any(cell.strip() for cell in row):
            raise SeriesError(f"{path}:{lineno}: blank line inside data")
        if index >= len(row):
            raise SeriesError(f"{path}:{lineno}: row has no column {index}")
        cell = row[index].strip()
        try:
            value = float(cell)
        except ValueError:
            raise SeriesError(f"{path}:{lineno}: non-numeric value {cell!r}") from None
        if not math.isfinite(value):
            raise SeriesError(f"{path}:{lineno}: non-finite value {cell!r}")
        values.append(value)
    if len(values) < MIN_LENGTH:
        raise SeriesError(f"{path}: need at least {MIN_LENGTH} rows, found {len(values)}")
    return np.array(values)


def save_series(path, values, header: str | None = "value") -> None:
    with Path(path).open("w", newline="") as fh:
        if header:
            fh.write(header + "\n")
        for v in values:
            fh.write(repr(float(v)) + "\n")
