"""Maximum-likelihood estimation of the transformation parameter alpha.

The transformed compositions are modelled as independent Gaussian vectors
(spatial dependence is deliberately ignored); the likelihood of the
compositions adds the log-Jacobian of alpha-IT. Compositions with zero
parts contribute through the sub-simplex spanned by their positive parts,
one likelihood term per zero pattern.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .simplex import ZeroPattern, as_compositions, pattern_groups
from .transforms import alpha_it, alpha_it_jacobian_logdet

#: relative ridge added to the ML covariance before inversion
COV_RIDGE = 1e-10
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class LikelihoodError(ValueError):
    """Likelihood cannot be evaluated (degenerate sample or Jacobian)."""


@dataclass(frozen=True)
class GaussianFit:
    mean: np.ndarray
    covariance: np.ndarray
    n: int


def gaussian_loglik(zs) -> tuple[GaussianFit, float]:
    """ML Gaussian fit and the profiled log-likelihood.

    Returns ``-(n/2) ln|S| - (1/2) sum_k (z_k - m)' S^-1 (z_k - m)`` with
    ``m``, ``S`` the ML estimates (divisor ``n``); the ``2 pi`` constant is
    omitted.
    """
    Z = np.asarray(zs, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    n, k = Z.shape
    if n < k + 1:
        raise LikelihoodError(f"need at least {k + 1} vectors in R^{k}, got {n}")
    mu = Z.mean(axis=0)
    R = Z - mu
    S = R.T @ R / n
    S = 0.5 * (S + S.T)
    tr = np.trace(S)
    if not np.isfinite(tr) or tr <= 0:
        raise LikelihoodError("degenerate sample: zero or non-finite variance")
    S = S + COV_RIDGE * tr / k * np.eye(k)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise LikelihoodError("covariance not positive definite") from exc
    logdet = 2.0 * np.log(np.diag(L)).sum()
    W = np.linalg.solve(L, R.T)
    quad = float((W * W).sum())
    return GaussianFit(mu, S, n), -0.5 * n * logdet - 0.5 * quad


def loglik_alpha(xs, alpha: float) -> float:
    """Log-likelihood of strictly positive compositions at ``alpha``."""
    X = np.atleast_2d(np.asarray(xs, dtype=float))
    return _loglik_positive(X, alpha)


def _loglik_positive(X, alpha):
    if np.any(X <= 0):
        raise LikelihoodError("loglik_alpha needs strictly positive compositions")
    Z = alpha_it(X, alpha)
    _, ll = gaussian_loglik(Z)
    jac = alpha_it_jacobian_logdet(X, alpha)
    if not np.all(np.isfinite(jac)):
        raise LikelihoodError(f"non-finite Jacobian at alpha={alpha}")
    return ll + float(jac.sum())


@dataclass
class PatternGroups:
    """Sample split by zero pattern, with the sub-compositions of each group."""

    subcompositions: dict[ZeroPattern, np.ndarray]
    counts: dict[ZeroPattern, int]
    skipped: list[ZeroPattern]
    n_excluded: int

    @property
    def used(self) -> list[ZeroPattern]:
        return [p for p in self.subcompositions]


def group_by_pattern(xs) -> PatternGroups:
    """Group compositions by zero pattern.

    Compositions with one positive part are excluded; groups with fewer
    members than their number of positive parts are skipped.
    """
    X = np.atleast_2d(as_compositions(xs))
    groups = pattern_groups(X)
    subs, counts, skipped = {}, {}, []
    excluded = 0
    for pat, idx in groups.items():
        if pat.dimension < 2:
            excluded += idx.size
            continue
        counts[pat] = int(idx.size)
        if idx.size < pat.dimension:
            skipped.append(pat)
            continue
        subs[pat] = X[np.ix_(idx, pat.support)]
    return PatternGroups(subs, counts, skipped, excluded)


def zero_pattern_terms(xs, alpha: float) -> dict[ZeroPattern, float]:
    """Per-pattern log-likelihood terms; the total likelihood is their sum."""
    groups = xs if isinstance(xs, PatternGroups) else group_by_pattern(xs)
    if not groups.subcompositions:
        raise LikelihoodError("every zero-pattern group was skipped")
    return {pat: _loglik_positive(sub, alpha) for pat, sub in groups.subcompositions.items()}


def loglik_alpha_with_zeros(xs, alpha: float) -> float:
    """Log-likelihood summed over zero-pattern groups."""
    return float(sum(zero_pattern_terms(xs, alpha).values()))


@dataclass
class AlphaEstimate:
    alpha_hat: float
    loglik_at_hat: float
    profile: list[tuple[float, float]]
    pattern_counts: dict[ZeroPattern, int]
    skipped_patterns: list[ZeroPattern] = field(default_factory=list)
    n_excluded: int = 0


def _golden_max(f, lo, hi, tol):
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return


def estimate_alpha(xs, alpha_max: float = 1.5, grid_step: float = 0.01,
                   tol: float = 1e-4) -> AlphaEstimate:
    """Maximise the zero-pattern log-likelihood over alpha.

    A grid scan on ``[grid_step, alpha_max]`` is followed by golden-section
    refinement between the neighbours of the best grid point.
    """
    if grid_step <= 0 or alpha_max <= grid_step:
        raise ValueError("need 0 < grid_step < alpha_max")
    groups = group_by_pattern(xs)
    if not groups.subcompositions:
        raise LikelihoodError("every zero-pattern group was skipped")
    n_grid = int(np.floor(alpha_max / grid_step + 1e-9))
    grid = grid_step * np.arange(1, n_grid + 1)
    evaluated: dict[float, float] = {}

    def f(a):
        a = float(a)
        if a not in evaluated:
            try:
                evaluated[a] = loglik_alpha_with_zeros(groups, a)
            except LikelihoodError:
                evaluated[a] = -np.inf
        return evaluated[a]

    values = np.array([f(a) for a in grid])
    if not np.any(np.isfinite(values)):
        raise LikelihoodError("log-likelihood undefined over the whole alpha grid")
    k = int(np.nanargmax(np.where(np.isfinite(values), values, -np.inf)))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]
    _golden_max(f, lo, hi, tol)
    profile = sorted(evaluated.items())
    a_hat, l_hat = max(profile, key=lambda t: t[1])
    return AlphaEstimate(
        alpha_hat=float(a_hat),
        loglik_at_hat=float(l_hat),
        profile=profile,
        pattern_counts=groups.counts,
        skipped_patterns=groups.skipped,
        n_excluded=groups.n_excluded,
    )
