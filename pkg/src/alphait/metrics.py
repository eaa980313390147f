"""Distances between compositions, prediction scores and Frechet means."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .simplex import CompositionError, _as_2d, as_compositions
from .transforms import coordinates, alpha_it_inverse, inverse_objective


def _pair(p, q):
    pa, one_p = _as_2d(p)
    qa, one_q = _as_2d(q)
    if pa.shape[1] != qa.shape[1]:
        raise CompositionError(f"dimension mismatch: {pa.shape[1]} vs {qa.shape[1]}")
    return pa, qa, one_p and one_q


def hellinger(p, q):
    """Hellinger distance ``sqrt(sum (sqrt p - sqrt q)**2) / sqrt 2``, in [0, 1]."""
    pa, qa, one = _pair(p, q)
    d = np.sqrt(((np.sqrt(pa) - np.sqrt(qa)) ** 2).sum(axis=1) / 2.0)
    return d[0] if one else d


def total_variation(p, q):
    """Total variation distance ``sum |p - q| / 2``, in [0, 1]."""
    pa, qa, one = _pair(p, q)
    d = 0.5 * np.abs(pa - qa).sum(axis=1)
    return d[0] if one else d


def alpha_it_distance(x, y, alpha: float):
    """Euclidean distance between alpha-IT images.

    ``alpha == 0`` is accepted and gives the Aitchison distance through the
    ILR; otherwise ``alpha`` must be positive.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    xa, ya, one = _pair(x, y)
    d = np.linalg.norm(coordinates(xa, alpha) - coordinates(ya, alpha), axis=1)
    return d[0] if one else d


def pooled_sd(Z) -> float:
    """Standard deviation pooled over all coordinates of ``Z`` (n x k).

    Each coordinate is centred on its own mean; the squared deviations are
    then averaged over every entry.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    dev = Z - Z.mean(axis=0)
    return float(np.sqrt((dev**2).sum() / (Z.size - Z.shape[1])))


@dataclass(frozen=True)
class ScoreReport:
    """Mean Hellinger, mean total variation and RMS alpha-IT error."""

    hellinger_mean: float
    total_variation_mean: float
    alpha_it_rmse: float
    alpha_used: float
    n_pairs: int
    sigma: float | None = None

    @property
    def normalized_rmse(self) -> float:
        if not self.sigma:
            return float("nan")
        return self.alpha_it_rmse / self.sigma


def score_predictions(truth, predicted, alpha: float, sigma: float | None = None) -> ScoreReport:
    """Score predicted compositions against the truth.

    Parameters
    ----------
    truth, predicted : array_like, shape (N, D)
    alpha : float
        Parameter of the alpha-IT metric used for the RMS error (0 = Aitchison).
    sigma : float, optional
        Normalisation carried in the report (pooled sd of training coordinates).
    """
    t = np.atleast_2d(as_compositions(truth))
    p = np.atleast_2d(as_compositions(predicted))
    if t.shape != p.shape:
        raise ValueError(f"truth and predictions differ in shape: {t.shape} vs {p.shape}")
    if t.shape[0] < 1:
        raise ValueError("nothing to score")
    dh = hellinger(t, p)
    dtv = total_variation(t, p)
    da = alpha_it_distance(t, p, alpha)
    return ScoreReport(
        hellinger_mean=float(np.mean(dh)),
        total_variation_mean=float(np.mean(dtv)),
        alpha_it_rmse=float(np.sqrt(np.mean(da**2))),
        alpha_used=float(alpha),
        n_pairs=int(t.shape[0]),
        sigma=sigma,
    )


def frechet_mean(xs, alpha: float, rng=None) -> np.ndarray:
    """Back-transformed mean of the alpha-IT images.

    If the averaged image is outside the codomain (possible only for
    ``alpha > 1``, where the codomain is not convex) the mean is instead
    found by direct minimisation of the summed squared alpha-IT distances.
    """
    X = np.atleast_2d(as_compositions(xs))
    if X.shape[0] < 1:
        raise ValueError("empty sample")
    Z = coordinates(X, alpha)
    zbar = Z.mean(axis=0)
    if alpha == 0:
        from .transforms import ilr_inverse

        return ilr_inverse(zbar)
    inv = alpha_it_inverse(zbar, alpha, rng)
    if inv.residual <= 1e-10:
        return inv.composition
    return _frechet_by_search(Z, alpha, inv.composition)


def _frechet_by_search(Z, alpha, start):
    D = Z.shape[1] + 1
    # sum_i ||z_i - A(m)||^2 = n ||zbar - A(m)||^2 + const, so search on the mean
    zbar = Z.mean(axis=0)

    def f(w):
        e = np.exp(np.append(w, 0.0) - max(0.0, w.max()))
        return inverse_objective(e / e.sum(), zbar, alpha) ** 2

    s = np.clip(start, 1e-300, None)
    w0 = np.log(s[:-1]) - np.log(s[-1])
    res = optimize.minimize(f, w0, method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-20, "maxiter": 2000 * D})
    e = np.exp(np.append(res.x, 0.0) - max(0.0, res.x.max()))
    cand = e / e.sum()
    return cand if f(res.x) < inverse_objective(start, zbar, alpha) ** 2 else start
