"""Omnidirectional empirical (cross-)variograms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

#: bins with fewer pairs than this are flagged as unreliable
MIN_PAIRS = 30
DEFAULT_BINS = 15


@dataclass(frozen=True)
class EmpiricalVariogram:
    """Binned cross-semivariances.

    ``gamma[k]`` is the symmetric p x p matrix of bin ``k``; ``lags[k]`` is
    the mean pair distance in the bin (the bin midpoint if it is empty).
    """

    edges: np.ndarray
    lags: np.ndarray
    counts: np.ndarray
    gamma: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def sparse(self) -> np.ndarray:
        return self.counts < MIN_PAIRS

    @property
    def p(self) -> int:
        return self.gamma.shape[1]

    def usable(self) -> np.ndarray:
        return self.counts > 0


def lag_edges(locations, n_bins: int = DEFAULT_BINS, max_lag: float | None = None):
    """Equal-width bin edges from 0 to ``max_lag`` (default: half the largest distance)."""
    if max_lag is None:
        max_lag = 0.5 * pdist(np.asarray(locations, dtype=float)).max()
    return np.linspace(0.0, max_lag, n_bins + 1)


def empirical_cross_variogram(locations, scores, bins=DEFAULT_BINS,
                              max_lag: float | None = None) -> EmpiricalVariogram:
    """Method-of-moments estimator of all direct and cross semivariograms.

    ``gamma_ij(h) = 1/(2 N_h) sum (z_i(a) - z_i(b)) (z_j(a) - z_j(b))`` over
    the ``N_h`` unordered pairs with distance in the bin.

    Parameters
    ----------
    locations : (n, 2) array
    scores : (n, p) array
    bins : int or array_like
        Number of equal-width bins, or explicit bin edges.
    max_lag : float, optional
        Upper edge when ``bins`` is an int.
    """
    loc = np.asarray(locations, dtype=float)
    Z = np.asarray(scores, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    n, p = Z.shape
    if n < 2 or loc.shape[0] != n:
        raise ValueError("need at least two located observations")
    edges = lag_edges(loc, bins, max_lag) if np.isscalar(bins) else np.asarray(bins, dtype=float)
    dist = pdist(loc)
    ia, ib = np.triu_indices(n, k=1)
    which = np.digitize(dist, edges) - 1
    # the last edge is inclusive
    which[dist == edges[-1]] = edges.size - 2
    keep = (which >= 0) & (which < edges.size - 1) & (dist > 0)
    which, dist = which[keep], dist[keep]
    dZ = Z[ia[keep]] - Z[ib[keep]]
    nb = edges.size - 1
    counts = np.bincount(which, minlength=nb)
    if counts.sum() == 0:
        raise ValueError("no pairs fall in any lag bin")
    sums = np.bincount(which, weights=dist, minlength=nb)
    lags = np.where(counts > 0, sums / np.maximum(counts, 1), 0.5 * (edges[:-1] + edges[1:]))
    gamma = np.zeros((nb, p, p))
    for i in range(p):
        for j in range(i, p):
            s = np.bincount(which, weights=dZ[:, i] * dZ[:, j], minlength=nb)
            g = np.where(counts > 0, s / (2.0 * np.maximum(counts, 1)), np.nan)
            gamma[:, i, j] = gamma[:, j, i] = g
    return EmpiricalVariogram(edges=edges, lags=lags, counts=counts, gamma=gamma)
