"""Global ordinary cokriging."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve
from scipy.spatial.distance import cdist, pdist

from .covariance import CovarianceModel

TARGET_CHUNK = 1000


class SingularSystemError(np.linalg.LinAlgError):
    """The cokriging system cannot be solved."""


@dataclass(frozen=True)
class KrigingResult:
    predictions: np.ndarray  # (m, p)
    variances: np.ndarray  # (m, p)
    weights: np.ndarray | None = None  # (m, p_target, n, p_data)


def _system(model: CovarianceModel, loc):
    n, p = loc.shape[0], model.p
    d = cdist(loc, loc)
    K = model.covariance(d).transpose(0, 2, 1, 3).reshape(n * p, n * p)
    F = np.kron(np.ones((n, 1)), np.eye(p))
    A = np.zeros((n * p + p, n * p + p))
    A[: n * p, : n * p] = K
    A[: n * p, n * p:] = F
    A[n * p:, : n * p] = F.T
    return A


def cokrige(model: CovarianceModel, locations, scores, targets,
            return_weights: bool = False) -> KrigingResult:
    """Predict all ``p`` variables at ``targets`` from every datum.

    One unbiasedness constraint (and Lagrange multiplier) per variable; the
    nugget is treated as micro-scale variation, so a target on a datum
    reproduces it with zero variance.

    Parameters
    ----------
    model : CovarianceModel
    locations : (n, 2) array
    scores : (n, p) array
    targets : (m, 2) array
    return_weights : bool
        Also return ``weights[t, j, a, i]``, the weight of variable ``i`` at
        datum ``a`` when predicting variable ``j`` at target ``t``.

    Raises
    ------
    SingularSystemError
        Duplicate data locations or an otherwise singular system.
    """
    loc = np.asarray(locations, dtype=float)
    Z = np.asarray(scores, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    tg = np.atleast_2d(np.asarray(targets, dtype=float))
    n, p = Z.shape
    if p != model.p:
        raise ValueError(f"model is {model.p}-variate but scores have {p} columns")
    if loc.shape[0] != n:
        raise ValueError("locations and scores differ in length")
    if n > 1 and pdist(loc).min() < 1e-12:
        raise SingularSystemError("duplicate data locations make the cokriging system singular")
    A = _system(model, loc)
    with warnings.catch_warnings():
        warnings.simplefilter("error", LinAlgWarning)
        try:
            lu = lu_factor(A, check_finite=True)
        except (LinAlgWarning, ValueError) as exc:
            raise SingularSystemError(f"cokriging system is singular: {exc}") from exc
    piv = np.abs(np.diag(lu[0]))
    if piv.min() <= 1e-14 * piv.max():
        raise SingularSystemError("cokriging system is numerically singular")
    m = tg.shape[0]
    pred = np.empty((m, p))
    var = np.empty((m, p))
    wts = np.empty((m, p, n, p)) if return_weights else None
    c0 = np.diag(model.covariance(0.0))
    zflat = Z.reshape(n * p)
    for start in range(0, m, TARGET_CHUNK):
        sl = slice(start, min(start + TARGET_CHUNK, m))
        mc = sl.stop - sl.start
        # rhs column (t, j): C_ij(|s_a - t|) stacked over (a, i), then e_j
        k = model.covariance(cdist(loc, tg[sl]))  # (n, mc, p, p)
        rhs = np.zeros((n * p + p, mc * p))
        rhs[: n * p] = k.transpose(0, 2, 1, 3).reshape(n * p, mc * p)
        rhs[n * p:] = np.tile(np.eye(p), (1, mc))
        sol = lu_solve(lu, rhs)
        lam, mu = sol[: n * p], sol[n * p:]
        pred[sl] = (zflat @ lam).reshape(mc, p)
        v = c0[None, :] - ((lam * rhs[: n * p]).sum(axis=0) + mu[np.tile(np.arange(p), mc), np.arange(mc * p)]).reshape(mc, p)
        var[sl] = np.where(np.abs(v) < 1e-10 * max(c0.max(), 1e-300), 0.0, v)
        if return_weights:
            wts[sl] = lam.reshape(n, p, mc, p).transpose(2, 3, 0, 1)
    return KrigingResult(pred, var, wts)
