"""Geostatistics of compositional data in isometric alpha-transformed coordinates."""

from .metrics import (ScoreReport, alpha_it_distance, frechet_mean, hellinger, pooled_sd,
                      score_predictions, total_variation)
from .mle import AlphaEstimate, LikelihoodError, estimate_alpha, loglik_alpha, loglik_alpha_with_zeros
from .simplex import (Composition, CompositionalField, CompositionError, DomainError, ZeroPattern,
                      aitchison_distance, as_compositions, closure, geometric_mean, perturb,
                      power, subcompose, uniform, zero_pattern)
from .transforms import (InverseResult, alpha_ct, alpha_it, alpha_it_inverse, alpha_it_jacobian,
                         alpha_it_jacobian_logdet, alr_boxcox, clr, coordinates, helmert, ilr,
                         ilr_inverse, in_codomain, inverse_coordinates, tsagris_alpha)

__all__ = [
    "AlphaEstimate", "Composition", "CompositionError", "CompositionalField", "DomainError",
    "InverseResult", "LikelihoodError", "ScoreReport", "ZeroPattern", "aitchison_distance",
    "alpha_ct", "alpha_it", "alpha_it_distance", "alpha_it_inverse", "alpha_it_jacobian",
    "alpha_it_jacobian_logdet", "alr_boxcox", "as_compositions", "closure", "clr", "coordinates",
    "estimate_alpha", "frechet_mean", "geometric_mean", "hellinger", "helmert", "ilr",
    "ilr_inverse", "in_codomain", "inverse_coordinates", "loglik_alpha", "loglik_alpha_with_zeros",
    "perturb", "pooled_sd", "power", "score_predictions", "subcompose", "total_variation",
    "tsagris_alpha", "uniform", "zero_pattern",
]
