"""Modified Bessel function of the second kind, K_nu(x), for real nu and x > 0.

Temme's series for x < 2 and Steed's continued fraction (CF2) otherwise
give K_mu and K_{mu+1} with |mu| <= 1/2; forward recurrence then reaches
K_nu. Vectorised over ``x`` for a scalar order.
"""

from __future__ import annotations

import math

import numpy as np

EPS = 1e-16
MAXIT = 10000
X_SWITCH = 2.0

EULER_GAMMA = 0.5772156649015329
# Taylor coefficients of 1/Gamma(z) about 0 (z, z^2, ...), entries 3, 5, 7
_RGAMMA_ODD = (-0.6558780715202538, -0.0420026350340952, 0.1665386113822915,
               -0.0421977345555443, -0.0096219715278770, 0.0072189432466630)


def _gamma_terms(mu: float):
    """``gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu)`` for Temme's series."""
    gampl = 1.0 / math.gamma(1.0 + mu)
    gammi = 1.0 / math.gamma(1.0 - mu)
    gam2 = 0.5 * (gammi + gampl)
    if abs(mu) < 1e-3:
        # 1/Gamma(1+x) = sum a_{k+1} x^k; the odd part of that series gives gam1
        a4, a6 = _RGAMMA_ODD[1], _RGAMMA_ODD[3]
        gam1 = -(EULER_GAMMA + a4 * mu**2 + a6 * mu**4)
    else:
        gam1 = (gammi - gampl) / (2.0 * mu)
    return gam1, gam2, gampl, gammi


def _temme(mu: float, x: np.ndarray):
    x2 = 0.5 * x
    pimu = math.pi * mu
    fact = 1.0 if abs(pimu) < EPS else pimu / math.sin(pimu)
    d = -np.log(x2)
    e = mu * d
    small_e = np.abs(e) < EPS
    fact2 = np.where(small_e, 1.0, np.sinh(e) / np.where(small_e, 1.0, e))
    gam1, gam2, gampl, gammi = _gamma_terms(mu)
    ff = fact * (gam1 * np.cosh(e) + gam2 * fact2 * d)
    total = ff.copy()
    ee = np.exp(e)
    p = 0.5 * ee / gampl
    q = 0.5 / (ee * gammi)
    c = np.ones_like(x)
    dd = x2 * x2
    sum1 = p.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, MAXIT + 1):
        ff = (i * ff + p + q) / (i * i - mu * mu)
        c = c * (dd / i)
        p = p / (i - mu)
        q = q / (i + mu)
        delta = c * ff
        total = np.where(active, total + delta, total)
        sum1 = np.where(active, sum1 + c * (p - i * ff), sum1)
        active &= np.abs(delta) >= np.abs(total) * EPS
        if not active.any():
            break
    else:
        raise ArithmeticError("Temme series did not converge")
    return total, sum1 * 2.0 / x


def _steed(mu: float, x: np.ndarray):
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25 - mu * mu
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    active = np.ones(x.shape, dtype=bool)
    for i in range(2, MAXIT + 1):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = np.where(active, h + delh, h)
        dels = q * delh
        s = np.where(active, s + dels, s)
        active &= np.abs(dels / s) >= EPS
        if not active.any():
            break
    else:
        raise ArithmeticError("Steed continued fraction did not converge")
    h = a1 * h
    with np.errstate(under="ignore"):
        kmu = np.sqrt(math.pi / (2.0 * x)) * np.exp(-x) / s
    k1 = kmu * (mu + x + 0.5 - h) / x
    return kmu, k1


def kv(nu: float, x):
    """K_nu(x) for scalar real ``nu`` and array ``x > 0``.

    ``K_{-nu} = K_nu``, so negative orders are reflected.
    """
    nu = abs(float(nu))
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa <= 0) or not np.all(np.isfinite(xa)):
        raise ValueError("kv requires finite x > 0")
    nl = int(nu + 0.5)
    mu = nu - nl
    kmu = np.empty_like(xa)
    k1 = np.empty_like(xa)
    lo = xa < X_SWITCH
    if lo.any():
        kmu[lo], k1[lo] = _temme(mu, xa[lo])
    if (~lo).any():
        kmu[~lo], k1[~lo] = _steed(mu, xa[~lo])
    with np.errstate(over="ignore"):
        for i in range(1, nl + 1):
            kmu, k1 = k1, (mu + i) * (2.0 / xa) * k1 + kmu
    return float(kmu[0]) if scalar else kmu


def kv_half_integer(n: int, x):
    """Closed form of ``K_{n+1/2}(x)`` (finite sum times ``sqrt(pi/2x) e^-x``)."""
    xa = np.asarray(x, dtype=float)
    total = np.zeros_like(xa)
    for k in range(n + 1):
        coef = math.factorial(n + k) / (math.factorial(k) * math.factorial(n - k))
        total = total + coef / (2.0 * xa) ** k
    return np.sqrt(math.pi / (2.0 * xa)) * np.exp(-xa) * total
