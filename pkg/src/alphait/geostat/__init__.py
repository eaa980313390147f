"""Spatial covariance modelling and cokriging of transformed compositions."""

from .bessel import kv
from .covariance import CovarianceFunction, CovarianceModel, psd_project, whittle_matern
from .kriging import KrigingResult, SingularSystemError, cokrige
from .lagcov import LagCovariances, lag_covariance_matrices
from .lmc import IdentifiabilityError, LMCFit, fit_default_lmc, fit_lmc, fit_lmc_history
from .variogram import EmpiricalVariogram, empirical_cross_variogram

__all__ = [
    "CovarianceFunction", "CovarianceModel", "EmpiricalVariogram", "IdentifiabilityError",
    "KrigingResult", "LMCFit", "LagCovariances", "SingularSystemError", "cokrige",
    "empirical_cross_variogram", "fit_default_lmc", "fit_lmc", "fit_lmc_history", "kv",
    "lag_covariance_matrices", "psd_project", "whittle_matern",
]
