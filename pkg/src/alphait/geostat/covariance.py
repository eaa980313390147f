"""Correlation functions and multivariate (LMC) covariance models."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bessel import kv, kv_half_integer

ZERO_LAG = 1e-12


def whittle_matern(r, nu: float):
    """Whittle-Matern correlation ``2**(1-nu)/Gamma(nu) r**nu K_nu(r)``.

    Equals 1 at ``r = 0`` (any ``r < 1e-12`` is treated as zero lag). For
    ``nu = 1/2`` this is ``exp(-r)``.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("negative lag")
    out = np.ones_like(r)
    pos = r >= ZERO_LAG
    if not pos.any():
        return out if out.ndim else float(out)
    rp = r[pos]
    if nu == 0.5:
        vals = np.exp(-rp)
    else:
        twice = 2.0 * nu
        if abs(twice - round(twice)) < 1e-14 and round(twice) % 2 == 1:
            k = kv_half_integer(int(round(nu - 0.5)), rp)
        else:
            k = kv(nu, rp)
        with np.errstate(divide="ignore", under="ignore"):
            logw = (1.0 - nu) * math.log(2.0) - math.lgamma(nu) + nu * np.log(rp) + np.log(k)
            vals = np.exp(logw)
    out[pos] = np.minimum(vals, 1.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CovarianceFunction:
    """A unit-sill isotropic correlation structure.

    ``kind`` is ``"matern"`` (Whittle-Matern with smoothness ``nu`` and
    length ``scale``) or ``"nugget"``.
    """

    kind: str = "matern"
    nu: float = 0.5
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("matern", "nugget"):
            raise ValueError(f"unknown structure kind {self.kind!r}")
        if self.kind == "matern" and (self.nu <= 0 or self.scale <= 0):
            raise ValueError("matern needs nu > 0 and scale > 0")

    @classmethod
    def nugget(cls) -> "CovarianceFunction":
        return cls(kind="nugget", nu=0.0, scale=0.0)

    @classmethod
    def matern(cls, nu: float = 0.5, scale: float = 1.0) -> "CovarianceFunction":
        return cls(kind="matern", nu=nu, scale=scale)

    def correlation(self, h):
        h = np.asarray(h, dtype=float)
        if self.kind == "nugget":
            return (h < ZERO_LAG).astype(float)
        return np.asarray(whittle_matern(h / self.scale, self.nu))

    def variogram(self, h):
        return 1.0 - self.correlation(h)

    def __str__(self) -> str:
        if self.kind == "nugget":
            return "nugget"
        return f"matern(nu={self.nu:g}, scale={self.scale:g})"


def psd_project(B, floor: float = 0.0):
    """Symmetrise and clip negative eigenvalues to ``floor``."""
    B = 0.5 * (np.asarray(B, dtype=float) + np.asarray(B, dtype=float).T)
    w, V = np.linalg.eigh(B)
    return (V * np.maximum(w, floor)) @ V.T


@dataclass(frozen=True)
class CovarianceModel:
    """Linear model of coregionalisation ``C(h) = sum_m B_m rho_m(h)``."""

    structures: tuple[tuple[CovarianceFunction, np.ndarray], ...]
    wss: float = field(default=float("nan"), compare=False)

    def __post_init__(self):
        if not self.structures:
            raise ValueError("a model needs at least one structure")
        fixed = []
        p = None
        for fn, B in self.structures:
            B = np.array(B, dtype=float, ndmin=2)
            if B.shape[0] != B.shape[1]:
                raise ValueError("coregionalisation matrices must be square")
            if p is not None and B.shape[0] != p:
                raise ValueError("coregionalisation matrices differ in size")
            p = B.shape[0]
            if np.linalg.eigvalsh(0.5 * (B + B.T)).min() < -1e-10:
                raise ValueError(f"coregionalisation matrix of {fn} is not PSD")
            B.flags.writeable = False
            fixed.append((fn, B))
        object.__setattr__(self, "structures", tuple(fixed))

    @classmethod
    def proportional_model(cls, B, fn: CovarianceFunction) -> "CovarianceModel":
        return cls(((fn, B),))

    @property
    def p(self) -> int:
        return self.structures[0][1].shape[0]

    @property
    def proportional(self) -> bool:
        """True if every ``B_m`` is a multiple of one common matrix."""
        mats = [B for _, B in self.structures if np.any(B != 0)]
        if len(mats) <= 1:
            return True
        ref = mats[0] / np.linalg.norm(mats[0])
        return all(np.allclose(B / np.linalg.norm(B), ref, atol=1e-10) for B in mats[1:])

    @property
    def nugget(self) -> np.ndarray:
        out = np.zeros((self.p, self.p))
        for fn, B in self.structures:
            if fn.kind == "nugget":
                out = out + B
        return out

    @property
    def sill(self) -> np.ndarray:
        return sum(B for _, B in self.structures)

    def covariance(self, h):
        """``C(h)`` with shape ``h.shape + (p, p)``."""
        h = np.asarray(h, dtype=float)
        out = np.zeros(h.shape + (self.p, self.p))
        for fn, B in self.structures:
            out = out + fn.correlation(h)[..., None, None] * B
        return out

    def variogram(self, h):
        h = np.asarray(h, dtype=float)
        return self.sill - self.covariance(h)

    def __str__(self) -> str:
        parts = [f"{fn}: {np.array2string(B, precision=4)}" for fn, B in self.structures]
        return "; ".join(parts)
