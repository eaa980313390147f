"""Lagged covariance matrices of log-ratio and alpha-transformed fields.

All estimators share the same ordered pair set for a given lag and centre
on the field mean, so linear identities between them (e.g.
``Xi + Xi' = -G T G'``) hold exactly, not just in expectation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ..simplex import CompositionalField, require_positive
from ..transforms import alpha_ct, clr, helmert


@dataclass(frozen=True)
class LagCovariances:
    lag: float
    n_pairs: int
    variation: np.ndarray  # T(h), D x D
    clr_cov: np.ndarray  # Xi(h), D x D
    ilr_cov: np.ndarray  # Phi(h), (D-1) x (D-1)
    alpha: float | None = None
    alpha_ct_cov: np.ndarray | None = None  # Xi_alpha(h)
    alpha_it_cov: np.ndarray | None = None  # Phi_alpha(h)


def lag_pairs(locations, lag: float, tol: float):
    """Ordered pairs ``(a, b)`` with ``|d(a, b) - lag| <= tol``.

    ``lag == 0`` selects the diagonal pairs ``(a, a)`` only.
    """
    loc = np.asarray(locations, dtype=float)
    if lag == 0:
        idx = np.arange(loc.shape[0])
        return idx, idx
    d = cdist(loc, loc)
    a, b = np.nonzero((np.abs(d - lag) <= tol) & (d > 0))
    return a, b


def cross_covariance(U, a, b):
    """``1/|P| sum_{(a,b) in P} (U_a - m)(U_b - m)'`` with ``m`` the column mean."""
    R = U - U.mean(axis=0)
    if a.size == 0:
        return np.full((U.shape[1], U.shape[1]), np.nan)
    return R[a].T @ R[b] / a.size


def variation_matrix(X, a, b):
    """``tau_ij = Cov[ln(X_i/X_j)(s), ln(X_i/X_j)(s+h)]`` over the pair set."""
    L = np.log(X)
    D = X.shape[1]
    LR = (L[:, :, None] - L[:, None, :]).reshape(X.shape[0], D * D)
    R = LR - LR.mean(axis=0)
    if a.size == 0:
        return np.full((D, D), np.nan)
    return ((R[a] * R[b]).sum(axis=0) / a.size).reshape(D, D)


def lag_covariance_matrices(field: CompositionalField, alpha: float | None, lags,
                            tol: float | None = None) -> list[LagCovariances]:
    """Variation, CLR, ILR and (optionally) alpha-CT/alpha-IT covariances per lag.

    Parameters
    ----------
    field : CompositionalField
        Strictly positive compositions.
    alpha : float or None
        alpha-transform parameter; ``None`` skips the alpha matrices.
    lags : sequence of float
    tol : float, optional
        Lag tolerance; defaults to half the smallest positive lag spacing.
    """
    X = field.parts
    require_positive(X, "log-ratio covariance matrices")
    lags = [float(h) for h in np.atleast_1d(lags)]
    if tol is None:
        pos = sorted({h for h in lags if h > 0})
        gaps = np.diff([0.0] + pos)
        tol = 0.5 * float(gaps.min()) if gaps.size else 0.0
    H = helmert(field.D)
    C = clr(X)
    Ua = alpha_ct(X, alpha) if alpha is not None else None
    out = []
    for h in lags:
        a, b = lag_pairs(field.locations, h, tol)
        Xi = cross_covariance(C, a, b)
        T = variation_matrix(X, a, b)
        entry = dict(lag=h, n_pairs=int(a.size), variation=T, clr_cov=Xi, ilr_cov=H @ Xi @ H.T)
        if Ua is not None:
            Xa = cross_covariance(Ua, a, b)
            entry.update(alpha=alpha, alpha_ct_cov=Xa, alpha_it_cov=H @ Xa @ H.T)
        out.append(LagCovariances(**entry))
    return out
