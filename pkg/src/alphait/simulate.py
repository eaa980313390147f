"""Synthetic spatial compositions from shifted and scaled Gaussian fields.

A parsimonious multivariate Whittle-Matern field (common correlation
function, covariance matrix with unit variances and a shared cross
covariance) is sampled at uniform random locations, mapped by
``sigma * (z - shift)`` into the alpha-IT codomain and back-transformed to
the simplex.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_factor
from scipy.spatial.distance import cdist

from .geostat.covariance import whittle_matern
from .simplex import CompositionalField, DomainError, closure
from .transforms import in_codomain, inverse_coordinates

MAX_POINTS = 5000
JITTER = 1e-10
ROUND_TRIP_TOL = 1e-8

PATTERN_SHIFTS = {"center": (0.0, 0.0), "border": (-2.3, 1.0), "corner": (4.0, -3.0)}
PRESET_ALPHAS = (0.0, 0.2, 0.6, 1.0)
PRESET_SCALES = {
    "center": (1.0, 0.50, 0.15, 0.065),
    "border": (1.0, 0.50, 0.15, 0.065),
    "corner": (1.0, 0.38, 0.11, 0.045),
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of one simulated scenario.

    ``p`` Gaussian variables give compositions with ``p + 1`` parts; the
    shift must have length ``p``.
    """

    alpha0: float = 0.2
    pattern: str = "center"
    shift: tuple[float, ...] = (0.0, 0.0)
    scale: float = 0.5
    n_points: int = 2000
    domain: tuple[tuple[float, float], tuple[float, float]] = ((0.0, 10.0), (0.0, 10.0))
    variance: float = 1.0
    cross_cov: float = 0.8
    nu: float = 0.5
    range_: float = 1.0
    seed: int = 0
    p: int = 2

    def __post_init__(self):
        if self.alpha0 < 0:
            raise ValueError("alpha0 must be >= 0")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if len(self.shift) != self.p:
            raise ValueError(f"shift has {len(self.shift)} entries for {self.p} variables")
        if not 1 <= self.n_points <= MAX_POINTS:
            raise ValueError(f"n_points must be in [1, {MAX_POINTS}]")

    @classmethod
    def preset(cls, name: str, **overrides) -> "ScenarioConfig":
        """Named scenario such as ``"center-0.2"`` or ``"corner-0.6"``."""
        try:
            pattern, a = name.split("-", 1)
            k = PRESET_ALPHAS.index(float(a))
            shift = PATTERN_SHIFTS[pattern]
        except (ValueError, KeyError):
            raise ValueError(f"unknown scenario preset {name!r}; expected e.g. {preset_names()[:3]}") from None
        base = cls(alpha0=PRESET_ALPHAS[k], pattern=pattern, shift=shift,
                   scale=PRESET_SCALES[pattern][k])
        return replace(base, **overrides)

    @property
    def coregionalization(self) -> np.ndarray:
        C = np.full((self.p, self.p), self.cross_cov)
        np.fill_diagonal(C, self.variance)
        return C

    def replicate(self, b: int) -> "ScenarioConfig":
        return replace(self, seed=self.seed + b)


def preset_names() -> list[str]:
    return [f"{pat}-{a:g}" for pat in PATTERN_SHIFTS for a in PRESET_ALPHAS]


@dataclass
class GRFSampler:
    """Draws of a parsimonious Whittle-Matern field at fixed locations.

    The Cholesky factor of the ``np x np`` covariance is computed once, so
    replicates at the same locations cost one triangular product each.
    """

    locations: np.ndarray
    coregionalization: np.ndarray
    nu: float = 0.5
    range_: float = 1.0
    _factor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float)
        C = np.asarray(self.coregionalization, dtype=float)
        if loc.shape[0] > MAX_POINTS:
            raise ValueError(f"dense simulation limited to {MAX_POINTS} points")
        R = whittle_matern(cdist(loc, loc) / self.range_, self.nu)
        # index a*p + i: variable i at location a
        K = np.kron(R, C)
        K[np.diag_indices_from(K)] += JITTER * np.mean(np.diag(K))
        try:
            L, _ = cho_factor(K, lower=True, check_finite=True)
        except np.linalg.LinAlgError as exc:
            raise ValueError("field covariance is not positive definite after jitter; "
                             "check |cross_cov| <= variance") from exc
        self._factor = np.tril(L)
        self.locations = loc

    @property
    def p(self) -> int:
        return self.coregionalization.shape[0]

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        n = self.locations.shape[0]
        e = rng.standard_normal(n * self.p)
        return (self._factor @ e).reshape(n, self.p)


def uniform_locations(n: int, domain, rng: np.random.Generator) -> np.ndarray:
    (x0, x1), (y0, y1) = domain
    return np.column_stack([rng.uniform(x0, x1, n), rng.uniform(y0, y1, n)])


def simulate_grf(config: ScenarioConfig):
    """Uniform locations and one field realisation, both from ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    loc = uniform_locations(config.n_points, config.domain, rng)
    sampler = GRFSampler(loc, config.coregionalization, config.nu, config.range_)
    return loc, sampler.draw(rng)


def apply_scenario(scores, config: ScenarioConfig) -> np.ndarray:
    """``scale * (scores - shift)``, checked against the alpha0 codomain.

    Raises
    ------
    DomainError
        Naming the first point that falls outside the codomain.
    """
    Z = np.atleast_2d(np.asarray(scores, dtype=float))
    out = config.scale * (Z - np.asarray(config.shift, dtype=float))
    if config.alpha0 > 0:
        inside = np.atleast_1d(in_codomain(out, config.alpha0))
        if not inside.all():
            i = int(np.flatnonzero(~inside)[0])
            raise DomainError(
                f"point {i} at {np.array2string(out[i], precision=4)} is outside the "
                f"alpha={config.alpha0:g} codomain ({int((~inside).sum())} points in total); "
                "reduce the scale or the shift")
    return out


def to_compositions(scores, alpha0: float, locations, part_names=None) -> CompositionalField:
    """Back-transform scores to compositions with the exact inverse.

    Raises
    ------
    DomainError
        If any point is not reproduced to :data:`ROUND_TRIP_TOL`.
    """
    res = inverse_coordinates(np.atleast_2d(scores), alpha0)
    bad = np.flatnonzero(np.atleast_1d(res.residual) > ROUND_TRIP_TOL)
    if bad.size:
        raise DomainError(f"point {int(bad[0])} is not attained by any composition "
                          f"(residual {float(np.atleast_1d(res.residual)[bad[0]]):.3g})")
    return CompositionalField(np.asarray(locations, dtype=float), res.composition, part_names)


def simulate_field(config: ScenarioConfig):
    """Full chain: field, scenario map and back-transform.

    Returns the compositional field and the transformed Gaussian scores.
    """
    loc, Z = simulate_grf(config)
    Zs = apply_scenario(Z, config)
    return to_compositions(Zs, config.alpha0, loc), Zs


def inject_zeros(field: CompositionalField, fraction: float, mix=(1.0,), seed: int = 0) -> CompositionalField:
    """Zero the smallest parts of a random subset of compositions.

    Parameters
    ----------
    field : CompositionalField
    fraction : float
        Share of all compositions that receive zeros, in ``[0, 1)``.
    mix : sequence of float
        ``mix[j]`` is the relative share, among the affected compositions,
        of those receiving ``j + 1`` zeros.
    seed : int

    Only strictly positive compositions are candidates, and at least two
    parts always remain positive.
    """
    if not 0 <= fraction < 1:
        raise ValueError("fraction must be in [0, 1)")
    mix = np.asarray(mix, dtype=float)
    if mix.ndim != 1 or mix.size == 0 or np.any(mix < 0) or mix.sum() <= 0:
        raise ValueError("mix must be non-negative proportions")
    if field.D - np.flatnonzero(mix > 0).max() - 1 < 2:
        raise ValueError(f"mix asks for {np.flatnonzero(mix > 0).max() + 1} zeros, leaving "
                         f"fewer than two positive parts out of {field.D}")
    X = field.parts.copy()
    n_hit = int(round(fraction * field.n))
    if n_hit == 0:
        return field
    rng = np.random.default_rng(seed)
    candidates = np.flatnonzero(np.all(X > 0, axis=1))
    if candidates.size < n_hit:
        raise ValueError(f"only {candidates.size} zero-free compositions for {n_hit} injections")
    chosen = rng.choice(candidates, size=n_hit, replace=False)
    shares = mix / mix.sum()
    counts = np.floor(shares * n_hit).astype(int)
    # largest remainders take the leftover units
    left = n_hit - counts.sum()
    counts[np.argsort(-(shares * n_hit - counts), kind="stable")[:left]] += 1
    n_zeros = np.repeat(np.arange(1, mix.size + 1), counts)
    for i, k in zip(chosen, n_zeros):
        X[i, np.argsort(X[i], kind="stable")[:k]] = 0.0
    return CompositionalField(field.locations, closure(X), field.part_names)
