"""Simplex domain types and Aitchison-geometry primitives.

Compositions are handled either as :class:`Composition` objects or, for
bulk work, as plain ``ndarray`` rows. Every function here accepts both: a
1-D input is one composition, a 2-D input is a stack with one composition
per row.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

#: inputs whose sum is farther than this from 1 are rejected
SUM_TOLERANCE = 1e-9
#: parts below this (after renormalisation) are snapped to exact zero
ZERO_SNAP = 1e-15


class CompositionError(ValueError):
    """Input cannot be interpreted as a composition."""


class DomainError(ValueError):
    """Operation undefined for the given composition (usually a zero part)."""


def _as_2d(x):
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        return arr[None, :], True
    if arr.ndim != 2:
        raise CompositionError(f"expected 1-D or 2-D input, got {arr.ndim}-D")
    return arr, False


def _restore(arr, was_1d):
    return arr[0] if was_1d else arr


def closure(v):
    """Rescale non-negative vectors to unit sum.

    Parameters
    ----------
    v : array_like, shape (D,) or (n, D)
        Non-negative entries; zeros are allowed but an all-zero row is not.

    Returns
    -------
    ndarray
        Same shape as ``v`` with every row summing to one.
    """
    arr, one = _as_2d(v)
    if not np.all(np.isfinite(arr)):
        raise CompositionError("non-finite entry")
    if np.any(arr < 0):
        raise CompositionError("negative entry")
    totals = arr.sum(axis=1, keepdims=True)
    if np.any(totals <= 0):
        raise CompositionError("all-zero vector cannot be closed")
    # rows already closed up to rounding are returned as is, so closure is idempotent bit for bit
    closed = np.abs(totals - 1.0) <= 2.0 * arr.shape[1] * np.finfo(float).eps
    return _restore(np.where(closed, arr, arr / totals), one)


def as_compositions(x, tol: float = SUM_TOLERANCE):
    """Validate rows already meant to lie on the simplex.

    Rows summing to one within ``tol`` are renormalised; parts below
    :data:`ZERO_SNAP` are then set to exactly 0 so that zero patterns are
    structural rather than float dust.
    """
    arr, one = _as_2d(x)
    if arr.shape[1] < 2:
        raise CompositionError("a composition needs at least 2 parts")
    if not np.all(np.isfinite(arr)):
        raise CompositionError("non-finite entry")
    if np.any(arr < 0):
        raise CompositionError("negative entry")
    totals = arr.sum(axis=1)
    bad = np.flatnonzero(np.abs(totals - 1.0) > tol)
    if bad.size:
        raise CompositionError(
            f"row {bad[0]} sums to {totals[bad[0]]!r}, outside tolerance {tol}"
        )
    arr = closure(arr)
    arr = np.where(arr < ZERO_SNAP, 0.0, arr)
    return _restore(closure(arr), one)


def require_positive(x, what: str = "operation"):
    """Raise :class:`DomainError` naming the first zero part, if any."""
    arr, _ = _as_2d(x)
    rows, cols = np.nonzero(arr <= 0)
    if rows.size:
        loc = f"part {cols[0]}" if arr.shape[0] == 1 else f"row {rows[0]}, part {cols[0]}"
        raise DomainError(f"{what} requires strictly positive parts; {loc} is zero")


@dataclass(frozen=True)
class ZeroPattern:
    """Mask of exactly-zero parts; ``True`` marks a zero."""

    mask: tuple[bool, ...]

    @property
    def D(self) -> int:
        return len(self.mask)

    @property
    def dimension(self) -> int:
        """Number of positive parts (D')."""
        return self.mask.count(False)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(~np.asarray(self.mask))

    @property
    def n_zeros(self) -> int:
        return self.D - self.dimension

    def __str__(self) -> str:
        return "".join("0" if z else "+" for z in self.mask)


class Composition:
    """A point of the closed simplex S^D_0 (non-negative parts summing to 1).

    Construction validates and snaps, see :func:`as_compositions`. The parts
    array is read-only.
    """

    __slots__ = ("_parts",)

    def __init__(self, parts, tol: float = SUM_TOLERANCE):
        arr = np.asarray(parts, dtype=float)
        if arr.ndim != 1:
            raise CompositionError("a Composition is a 1-D vector of parts")
        arr = np.array(as_compositions(arr, tol), dtype=float)
        arr.flags.writeable = False
        self._parts = arr

    @classmethod
    def from_vector(cls, v) -> "Composition":
        """Close an arbitrary non-negative vector."""
        return cls(closure(v))

    @classmethod
    def uniform(cls, D: int) -> "Composition":
        return cls(uniform(D))

    @property
    def parts(self) -> np.ndarray:
        return self._parts

    @property
    def D(self) -> int:
        return self._parts.size

    @property
    def strictly_positive(self) -> bool:
        return bool(self._parts.min() > 0)

    @property
    def zero_pattern(self) -> ZeroPattern:
        return zero_pattern(self._parts)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._parts, dtype=dtype)

    def __len__(self) -> int:
        return self.D

    def __iter__(self):
        return iter(self._parts)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Composition):
            return NotImplemented
        return np.array_equal(self._parts, other._parts)

    def __hash__(self) -> int:
        return hash(self._parts.tobytes())

    def __repr__(self) -> str:
        return f"Composition({np.array2string(self._parts, separator=', ')})"


def uniform(D: int) -> np.ndarray:
    """Neutral element of the simplex, ``(1/D, ..., 1/D)``."""
    if D < 2:
        raise CompositionError("D must be at least 2")
    return np.full(D, 1.0 / D)


def perturb(x, y):
    """Perturbation ``C(x * y)``, the simplex group operation."""
    xa, one_x = _as_2d(x)
    ya, one_y = _as_2d(y)
    require_positive(xa, "perturbation")
    require_positive(ya, "perturbation")
    logs = np.log(xa) + np.log(ya)
    out = _softmax_rows(logs)
    return _restore(out, one_x and one_y)


def perturb_inv(x, y):
    """Neg-perturbation ``x ⊖ y = x ⊕ ((-1) ⊙ y)``."""
    return perturb(x, power(-1.0, y))


def power(a: float, x):
    """Powering ``C(x ** a)``, the simplex scalar multiplication."""
    xa, one = _as_2d(x)
    require_positive(xa, "powering")
    return _restore(_softmax_rows(a * np.log(xa)), one)


def _softmax_rows(logs):
    logs = logs - logs.max(axis=1, keepdims=True)
    e = np.exp(logs)
    return e / e.sum(axis=1, keepdims=True)


def geometric_mean(x):
    """Geometric mean of the parts, evaluated as ``exp(mean(log x))``."""
    xa, one = _as_2d(x)
    if xa.shape[1] < 2:
        raise CompositionError("D must be at least 2")
    require_positive(xa, "geometric mean")
    g = np.exp(np.log(xa).mean(axis=1))
    return g[0] if one else g


def aitchison_distance(x, y):
    """Aitchison distance from the pairwise log-ratio double sum.

    ``sqrt(1/(2D) * sum_ij (ln(x_i/x_j) - ln(y_i/y_j))**2)``
    """
    xa, one_x = _as_2d(x)
    ya, one_y = _as_2d(y)
    if xa.shape[1] != ya.shape[1]:
        raise CompositionError("dimension mismatch")
    require_positive(xa, "Aitchison distance")
    require_positive(ya, "Aitchison distance")
    lx, ly = np.log(xa), np.log(ya)
    rx = lx[:, :, None] - lx[:, None, :]
    ry = ly[:, :, None] - ly[:, None, :]
    D = xa.shape[1]
    d = np.sqrt(((rx - ry) ** 2).sum(axis=(1, 2)) / (2 * D))
    return d[0] if (one_x and one_y) else d


def zero_pattern(x) -> ZeroPattern:
    """Zero mask of a single composition."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise CompositionError("zero_pattern takes one composition")
    return ZeroPattern(tuple(bool(v) for v in arr == 0.0))


def zero_patterns(X) -> list[ZeroPattern]:
    return [zero_pattern(row) for row in np.atleast_2d(np.asarray(X, dtype=float))]


def subcompose(x, pattern: ZeroPattern) -> np.ndarray:
    """Drop the zero parts of ``x``; the remainder already sums to one.

    Raises
    ------
    CompositionError
        If the zeros of ``x`` do not match ``pattern`` or fewer than two parts
        would remain.
    """
    arr = np.asarray(x, dtype=float)
    if zero_pattern(arr) != pattern:
        raise CompositionError(
            f"zero pattern mismatch: composition has {zero_pattern(arr)}, expected {pattern}"
        )
    if pattern.dimension < 2:
        raise CompositionError("single positive part; sub-composition has D' < 2")
    return arr[pattern.support]


@dataclass(frozen=True)
class CompositionalField:
    """Georeferenced compositions on planar coordinates."""

    locations: np.ndarray
    parts: np.ndarray
    part_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        loc = np.array(self.locations, dtype=float)
        parts = np.array(as_compositions(np.atleast_2d(self.parts)), dtype=float)
        if loc.ndim != 2 or loc.shape[1] != 2:
            raise CompositionError("locations must be an (n, 2) array")
        if loc.shape[0] != parts.shape[0]:
            raise CompositionError("locations and compositions differ in length")
        if loc.shape[0] < 1:
            raise CompositionError("empty field")
        _, idx, counts = np.unique(loc, axis=0, return_index=True, return_counts=True)
        if np.any(counts > 1):
            dup = np.sort(idx[counts > 1])[0]
            raise CompositionError(f"duplicate location {tuple(loc[dup])}")
        loc.flags.writeable = False
        parts.flags.writeable = False
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "parts", parts)
        if not self.part_names:
            names = tuple(f"part{i + 1}" for i in range(parts.shape[1]))
            object.__setattr__(self, "part_names", names)

    @property
    def n(self) -> int:
        return self.parts.shape[0]

    @property
    def D(self) -> int:
        return self.parts.shape[1]

    def subset(self, index) -> "CompositionalField":
        index = np.asarray(index)
        return CompositionalField(self.locations[index], self.parts[index], self.part_names)

    def zero_census(self) -> dict[int, int]:
        """Number of compositions per count of zero parts."""
        counts = Counter((self.parts == 0).sum(axis=1).tolist())
        return {k: counts.get(k, 0) for k in range(self.D)}

    @property
    def strictly_positive(self) -> bool:
        return bool(np.all(self.parts > 0))


def pattern_groups(X) -> dict[ZeroPattern, np.ndarray]:
    """Row indices of ``X`` grouped by zero pattern, in first-seen order."""
    groups: dict[ZeroPattern, list[int]] = {}
    for i, pat in enumerate(zero_patterns(X)):
        groups.setdefault(pat, []).append(i)
    return {k: np.asarray(v) for k, v in groups.items()}


def stack(compositions: Iterable) -> np.ndarray:
    """Stack compositions (objects or arrays) into an ``(n, D)`` array."""
    return np.vstack([np.asarray(c, dtype=float) for c in compositions])
