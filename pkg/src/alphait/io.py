"""CSV input/output for fields, coordinates and result tables."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .simplex import SUM_TOLERANCE, CompositionError, CompositionalField

FLOAT_FMT = "%.17g"


class FieldFormatError(ValueError):
    """A compositional CSV file is malformed."""


def fmt(v) -> str:
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    return str(v)


def _read_rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = None
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row) or row[0].lstrip().startswith("#"):
                continue
            if header is None:
                header = [c.strip() for c in row]
                continue
            yield header, lineno, row
        if header is None:
            raise FieldFormatError(f"{path}: empty file")


def read_matrix(path, min_cols: int = 1):
    """Header plus float matrix from a CSV file (line-numbered errors)."""
    header, data = None, []
    for header, lineno, row in _read_rows(path):
        if len(row) != len(header):
            raise FieldFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            data.append([float(c) for c in row])
        except ValueError:
            raise FieldFormatError(f"{path}:{lineno}: non-numeric value in {row}") from None
    if header is None or len(header) < min_cols:
        raise FieldFormatError(f"{path}: need a header with at least {min_cols} columns")
    return header, np.array(data, dtype=float).reshape(-1, len(header))


def load_field(path, tol: float = SUM_TOLERANCE) -> CompositionalField:
    """Read ``x, y, part1, ..., partD`` into a :class:`CompositionalField`.

    Rows summing to one within ``tol`` are renormalised and near-zero parts
    snapped to 0. Use :meth:`CompositionalField.zero_census` for the count
    of compositions per number of zero parts.

    Raises
    ------
    FieldFormatError
        Malformed rows, negative parts, sums outside tolerance or duplicated
        coordinates, with the offending line number.
    """
    rows, lines, header = [], [], None
    for header, lineno, row in _read_rows(path):
        if len(header) < 4:
            raise FieldFormatError(f"{path}: header needs x, y and at least two parts")
        if len(row) != len(header):
            raise FieldFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise FieldFormatError(f"{path}:{lineno}: non-numeric value in {row}") from None
        parts = np.array(vals[2:])
        if not np.all(np.isfinite(vals)):
            raise FieldFormatError(f"{path}:{lineno}: non-finite value")
        if np.any(parts < 0):
            raise FieldFormatError(f"{path}:{lineno}: negative part")
        if abs(parts.sum() - 1.0) > tol:
            raise FieldFormatError(f"{path}:{lineno}: parts sum to {parts.sum():.17g}, not 1 within {tol:g}")
        rows.append(vals)
        lines.append(lineno)
    if not rows:
        raise FieldFormatError(f"{path}: no data rows")
    arr = np.array(rows)
    loc = arr[:, :2]
    _, first, inverse = np.unique(loc, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    dup = np.flatnonzero(first[inverse] != np.arange(len(rows)))
    if dup.size:
        i = dup[0]
        raise FieldFormatError(f"{path}:{lines[i]}: duplicate coordinates (same as line {lines[first[inverse[i]]]})")
    try:
        return CompositionalField(loc, arr[:, 2:], tuple(header[2:]))
    except CompositionError as exc:
        raise FieldFormatError(f"{path}: {exc}") from exc


def write_field(path, field: CompositionalField) -> None:
    write_table(path, ["x", "y", *field.part_names], np.column_stack([field.locations, field.parts]))


def write_table(path, header, rows) -> None:
    """Write rows (sequences of floats/str) with full float precision."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
