"""Maps between the simplex and Euclidean coordinates.

CLR/ILR, the centred and isometric alpha-transformations (alpha-CT and
alpha-IT), the Jacobian of the latter, its numerical inverse, and two
comparison transforms (closure-based alpha-transformation, ALR Box-Cox).

Row convention: a 1-D input is one composition and yields a 1-D output; a
2-D input yields one output row per composition.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import optimize

from .simplex import DomainError, _as_2d, _restore, as_compositions, require_positive

#: below this alpha, strictly positive inputs go through the analytic log-ratio maps
ILR_SWITCH = 1e-6
#: a part this small after the boundary solve is a candidate structural zero
BOUNDARY_SNAP = 1e-7


@dataclass(frozen=True)
class TransformBasis:
    """Helmert matrix ``H`` ((D-1) x D) and centring matrix ``G = I - J/D``."""

    D: int
    helmert: np.ndarray
    centering: np.ndarray


@lru_cache(maxsize=None)
def _helmert(D: int) -> np.ndarray:
    H = np.zeros((D - 1, D))
    for i in range(1, D):
        norm = np.sqrt(i * (i + 1))
        H[i - 1, :i] = 1.0 / norm
        H[i - 1, i] = -i / norm
    H.flags.writeable = False
    return H


def helmert(D: int) -> np.ndarray:
    """Orthonormal basis of the zero-sum hyperplane, one basis vector per row.

    Row ``i`` (1-based) holds ``i`` entries ``1/sqrt(i(i+1))`` followed by
    ``-i/sqrt(i(i+1))`` and zeros, so ``H @ H.T = I`` and ``H.T @ H = G``.
    """
    if int(D) != D or D < 2:
        raise ValueError(f"D must be an integer >= 2, got {D!r}")
    return _helmert(int(D))


def helmert_basis(D: int) -> TransformBasis:
    H = helmert(D)
    G = np.eye(D) - np.full((D, D), 1.0 / D)
    return TransformBasis(D=int(D), helmert=H, centering=G)


def _check_alpha(alpha: float):
    if not np.isfinite(alpha) or alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha!r}")


# --------------------------------------------------------------------------
# log-ratio transforms
# --------------------------------------------------------------------------


def clr(x):
    """Centred log-ratio ``ln(x / g(x))``; components sum to zero."""
    xa, one = _as_2d(x)
    require_positive(xa, "clr")
    lx = np.log(xa)
    return _restore(lx - lx.mean(axis=1, keepdims=True), one)


def clr_inverse(u):
    ua, one = _as_2d(u)
    e = np.exp(ua - ua.max(axis=1, keepdims=True))
    return _restore(e / e.sum(axis=1, keepdims=True), one)


def ilr(x):
    """Isometric log-ratio ``H clr(x)``."""
    xa, one = _as_2d(x)
    return _restore(clr(xa) @ helmert(xa.shape[1]).T, one)


def ilr_inverse(z):
    za, one = _as_2d(z)
    return _restore(clr_inverse(za @ helmert(za.shape[1] + 1)), one)


# --------------------------------------------------------------------------
# alpha transforms
# --------------------------------------------------------------------------


def _boxcox_parts(xa, alpha):
    # (x**a - 1)/a via expm1: no cancellation for small a; zero parts map to -1/a
    with np.errstate(divide="ignore"):
        lx = np.log(xa)
    return np.expm1(alpha * lx) / alpha


def alpha_ct(x, alpha: float):
    """Centred alpha-transformation ``G x**alpha / alpha``.

    Zeros are allowed. For ``alpha < ILR_SWITCH`` the strictly positive
    input is sent through :func:`clr` instead.
    """
    _check_alpha(alpha)
    xa, one = _as_2d(x)
    xa = as_compositions(xa)
    if alpha < ILR_SWITCH:
        require_positive(xa, f"alpha-CT at alpha={alpha:g} (log-ratio limit)")
        return _restore(clr(xa), one)
    b = _boxcox_parts(xa, alpha)
    return _restore(b - b.mean(axis=1, keepdims=True), one)


def alpha_it(x, alpha: float):
    """Isometric alpha-transformation ``H x**alpha / alpha``.

    Because ``H`` annihilates constant vectors this equals ``H`` applied to
    the Box-Cox transform ``(x**alpha - 1)/alpha``, which is how it is
    evaluated.
    """
    _check_alpha(alpha)
    xa, one = _as_2d(x)
    xa = as_compositions(xa)
    H = helmert(xa.shape[1])
    if alpha < ILR_SWITCH:
        require_positive(xa, f"alpha-IT at alpha={alpha:g} (log-ratio limit)")
        return _restore(clr(xa) @ H.T, one)
    return _restore(_boxcox_parts(xa, alpha) @ H.T, one)


def coordinates(x, alpha: float):
    """alpha-IT coordinates, with ``alpha == 0`` meaning the ILR."""
    if alpha == 0:
        return ilr(as_compositions(x))
    return alpha_it(x, alpha)


def alpha_it_jacobian(x, alpha: float):
    """Jacobian of alpha-IT in the chart ``(x_1, ..., x_{D-1})``.

    ``J_ij = H_ij x_j**(alpha-1) - H_iD x_D**(alpha-1)``; shape ``(D-1, D-1)``
    per composition.
    """
    _check_alpha(alpha)
    xa, one = _as_2d(x)
    D = xa.shape[1]
    if alpha < 1:
        require_positive(xa, "alpha-IT Jacobian with alpha < 1")
    H = helmert(D)
    w = xa ** (alpha - 1.0)
    J = H[None, :, : D - 1] * w[:, None, : D - 1] - H[None, :, D - 1 : D] * w[:, None, D - 1 : D]
    return J[0] if one else J


def alpha_it_jacobian_logdet(x, alpha: float, return_sign: bool = False):
    """``log|det J(x)|``; ``-inf`` where the Jacobian is singular.

    With ``return_sign=True`` the determinant sign is returned too, a zero
    sign flagging singularity.
    """
    J = alpha_it_jacobian(x, alpha)
    sign, logdet = np.linalg.slogdet(J)
    if return_sign:
        return logdet, sign
    return logdet


# --------------------------------------------------------------------------
# inverse alpha-IT
# --------------------------------------------------------------------------


class InverseResult(NamedTuple):
    """Output of :func:`alpha_it_inverse`.

    ``residual`` is ``Q_z(x) = ||H^T z - G x**alpha / alpha||``: zero inside
    the codomain, positive for a boundary (projected) solution.
    """

    composition: np.ndarray
    residual: np.ndarray | float
    converged: np.ndarray | bool


def inverse_objective(y, z, alpha: float) -> float:
    """``Q_z(y)`` for a single candidate composition ``y``."""
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    H = helmert(y.size)
    u = _boxcox_parts(y[None, :], alpha)[0]
    return float(np.linalg.norm(H.T @ z - (u - u.mean())))


def _residuals(Y, V, alpha):
    U = _boxcox_parts(Y, alpha)
    U = U - U.mean(axis=1, keepdims=True)
    return np.linalg.norm(V - U, axis=1)


def _levels(V, alpha):
    # shift alpha*v so that its minimum is 0; point is inside iff sum(d**(1/alpha)) < 1
    A = alpha * V
    return A - A.min(axis=1, keepdims=True)


def in_codomain(z, alpha: float):
    """Whether ``z`` lies strictly inside the alpha-IT image of the simplex.

    ``z`` is attained by a strictly positive ``x`` iff ``x**alpha = alpha H^T z + c``
    for a shift ``c`` making every entry positive with ``sum x = 1``; the sum
    is increasing in ``c``, so the test reduces to its value at the smallest
    admissible shift.
    """
    _check_alpha(alpha)
    za, one = _as_2d(z)
    if alpha < ILR_SWITCH:
        out = np.ones(za.shape[0], dtype=bool)
    else:
        d = _levels(za @ helmert(za.shape[1] + 1), alpha)
        with np.errstate(over="ignore"):
            out = (d ** (1.0 / alpha)).sum(axis=1) < 1.0
    return bool(out[0]) if one else out


def _interior_solve(d, alpha, iters=80):
    # bisection for e in (0, 1] with sum((d + e)**p) = 1; monotone in e
    p = 1.0 / alpha
    lo = np.zeros(d.shape[0])
    hi = np.ones(d.shape[0])
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        with np.errstate(over="ignore"):
            s = ((d + mid[:, None]) ** p).sum(axis=1)
        above = s > 1.0
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    e = 0.5 * (lo + hi)
    Y = (d + e[:, None]) ** p
    return Y / Y.sum(axis=1, keepdims=True)


def _push_to_sphere(q, p):
    # smallest shift t >= 0 with sum((q + t)**p) = 1; objective is shift-invariant
    lo, hi = 0.0, 1.0
    if (q**p).sum() >= 1.0:
        return q
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if ((q + mid) ** p).sum() > 1.0:
            hi = mid
        else:
            lo = mid
    return q + 0.5 * (lo + hi)


def _solve_q_space(v, alpha, fixed_zero):
    """Convex (for alpha <= 1) program in ``q = y**alpha``.

    minimise ``||G q/alpha - v||^2`` s.t. ``q >= 0``, ``sum q**(1/alpha) <= 1``.
    """
    D = v.size
    p = 1.0 / alpha
    scale = max(1.0, float(np.abs(v).max()))

    def f(q):
        r = q / alpha - v
        r = r - r.mean()
        return float(r @ r) / scale**2

    def grad(q):
        r = q / alpha - v
        r = r - r.mean()
        return 2.0 * r / alpha / scale**2

    cons = {
        "type": "ineq",
        "fun": lambda q: 1.0 - np.sum(np.abs(q) ** p),
        "jac": lambda q: -p * np.abs(q) ** (p - 1.0),
    }
    bounds = [(0.0, 0.0) if fixed_zero[i] else (0.0, 1.0) for i in range(D)]
    q0 = np.where(fixed_zero, 0.0, (1.0 / max(1, D - fixed_zero.sum())) ** alpha * 0.999)
    res = optimize.minimize(
        f, q0, jac=grad, bounds=bounds, constraints=[cons], method="SLSQP",
        options={"ftol": 1e-16, "maxiter": 500},
    )
    q = np.clip(res.x, 0.0, 1.0)
    q[fixed_zero] = 0.0
    q = _push_to_sphere(q, p)
    with np.errstate(under="ignore"):
        y = q**p
    # status 8: line search cannot improve at the ftol floor, i.e. already optimal
    return y / y.sum(), bool(res.success or res.status == 8)


def _softmax(w):
    e = np.exp(w - w.max())
    return e / e.sum()


def _solve_nelder_mead(v, alpha, support, rng, restarts=3):
    """Derivative-free search over the softmax parametrisation of ``support``."""
    k = support.size
    D = v.size
    z = v @ helmert(D).T

    def embed(w):
        y = np.zeros(D)
        y[support] = _softmax(np.append(w, 0.0))
        return y

    def f(w):
        return inverse_objective(embed(w), z, alpha) ** 2

    if k == 1:
        y = embed(np.zeros(0))
        return y, True
    best, ok = None, False
    starts = [np.zeros(k - 1)] + [rng.normal(scale=1.0, size=k - 1) for _ in range(restarts - 1)]
    for w0 in starts:
        res = optimize.minimize(
            f, w0, method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-24, "maxiter": 400 * k * k, "maxfev": 800 * k * k},
        )
        if best is None or res.fun < best.fun:
            best = res
        ok = ok or res.success
    return embed(best.x), ok


def _boundary_solve(v, alpha, rng):
    D = v.size
    z = v @ helmert(D).T
    candidates = []
    fixed = np.zeros(D, dtype=bool)
    if alpha <= 1.0:
        y, ok = _solve_q_space(v, alpha, fixed)
        candidates.append((inverse_objective(y, z, alpha), y, ok))
    if alpha > 1.0 or not candidates[-1][2]:
        y, ok = _solve_nelder_mead(v, alpha, np.arange(D), rng)
        candidates.append((inverse_objective(y, z, alpha), y, ok))
    # refinement: pin near-zero parts to exactly zero and re-solve on the face
    res, y, ok = min(candidates, key=lambda c: c[0])
    for _ in range(D):
        small = (y < BOUNDARY_SNAP) & ~fixed
        if res <= 1e-10 or not small.any() or (fixed | small).sum() > D - 1:
            break
        fixed = fixed | small
        if alpha <= 1.0:
            y2, ok2 = _solve_q_space(v, alpha, fixed)
        else:
            y2, ok2 = _solve_nelder_mead(v, alpha, np.flatnonzero(~fixed), rng)
        y2[fixed] = 0.0
        y2 = y2 / y2.sum()
        res2 = inverse_objective(y2, z, alpha)
        if res2 <= res + 1e-12:
            res, y, ok = res2, y2, ok2
        else:
            break
    y = np.where(y < BOUNDARY_SNAP * 1e-3, 0.0, y) if res > 1e-10 else y
    y = y / y.sum()
    return y, inverse_objective(y, z, alpha), ok


def alpha_it_inverse(z, alpha: float, rng: np.random.Generator | None = None) -> InverseResult:
    """Composition(s) minimising ``Q_z(y) = ||H^T z - G y**alpha / alpha||``.

    Inside the codomain the minimiser solves ``y**alpha = alpha H^T z + c``
    exactly, with the scalar ``c`` fixed by a bracketed root search on
    ``sum y = 1``. Outside it the minimum is positive and sits on the border
    of the simplex; it is found by a constrained solve in ``q = y**alpha``
    (Nelder-Mead restarts over a softmax chart when ``alpha > 1``), then
    parts below :data:`BOUNDARY_SNAP` are pinned to zero and the face
    re-solved.

    Parameters
    ----------
    z : array_like, shape (D-1,) or (n, D-1)
    alpha : float
        Must be positive.
    rng : numpy.random.Generator, optional
        Source for optimizer restarts; a fixed seed is used when omitted.
    """
    _check_alpha(alpha)
    za, one = _as_2d(z)
    if not np.all(np.isfinite(za)):
        raise ValueError("non-finite coordinates")
    if rng is None:
        rng = np.random.default_rng(0)
    D = za.shape[1] + 1
    V = za @ helmert(D)
    n = za.shape[0]
    if alpha < ILR_SWITCH:
        X = clr_inverse(V)
        res = np.zeros(n)
        conv = np.ones(n, dtype=bool)
        return _pack(X, res, conv, one)
    d = _levels(V, alpha)
    with np.errstate(over="ignore"):
        inside = (d ** (1.0 / alpha)).sum(axis=1) < 1.0
    X = np.empty((n, D))
    conv = np.ones(n, dtype=bool)
    if inside.any():
        X[inside] = _interior_solve(d[inside], alpha)
    for i in np.flatnonzero(~inside):
        X[i], _, conv[i] = _boundary_solve(V[i], alpha, rng)
    res = _residuals(X, V, alpha)
    return _pack(X, res, conv, one)


def _pack(X, res, conv, one):
    if one:
        return InverseResult(X[0], float(res[0]), bool(conv[0]))
    return InverseResult(X, res, conv)


def inverse_coordinates(z, alpha: float, rng=None) -> InverseResult:
    """Inverse of :func:`coordinates` (``alpha == 0`` is the ILR inverse)."""
    if alpha == 0:
        za, one = _as_2d(z)
        X = ilr_inverse(za)
        return _pack(X, np.zeros(za.shape[0]), np.ones(za.shape[0], dtype=bool), one)
    return alpha_it_inverse(z, alpha, rng)


# --------------------------------------------------------------------------
# comparison transforms
# --------------------------------------------------------------------------


def tsagris_alpha(x, alpha: float):
    """Closure-based alpha-transformation ``H (D C(x**alpha) - 1) / alpha``.

    Evaluated as ``alpha_it(x) / mean(x**alpha)``, which is algebraically
    identical and free of cancellation at small ``alpha``.
    """
    if alpha == 0 or not np.isfinite(alpha):
        raise ValueError("alpha must be non-zero; use ilr for the limit")
    xa, one = _as_2d(x)
    xa = as_compositions(xa)
    if alpha < 0:
        require_positive(xa, "negative-alpha transformation")
        u = xa**alpha
        u = u / u.sum(axis=1, keepdims=True)
        out = (xa.shape[1] * u - 1.0) @ helmert(xa.shape[1]).T / alpha
        return _restore(out, one)
    m = (xa**alpha).mean(axis=1, keepdims=True)
    return _restore(_boxcox_parts(xa, alpha) @ helmert(xa.shape[1]).T / m, one)


def alr_boxcox(x, alpha: float):
    """Box-Cox of the ratios to the last part, ``((x_i/x_D)**alpha - 1)/alpha``.

    ``alpha == 0`` gives the additive log-ratio.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    xa, one = _as_2d(x)
    xa = as_compositions(xa)
    if np.any(xa[:, -1] <= 0):
        raise DomainError("denominator (last) part is zero")
    ratio = xa[:, :-1] / xa[:, -1:]
    if alpha == 0:
        require_positive(xa, "alr")
        return _restore(np.log(ratio), one)
    with np.errstate(divide="ignore"):
        out = np.expm1(alpha * np.log(ratio)) / alpha
    return _restore(out, one)
