"""Fisher information volumes of logistic regression models and MDL selection."""

from .fit import FitResult, LassoPath, fit_lasso_path, fit_mle, max_loglik
from .geometry import embed_phi, fisher_info, volume_density
from .linalg import DesignMatrix, as_design, degeneracy_report, minor_sum_check, minors
from .selection import ModelScore, complexity_approx, complexity_bic, complexity_exact_volume, score, select
from .volume import (
    IntegrationConfig,
    NotConvergedError,
    VolumeEstimate,
    approx_volume,
    bounds_check,
    integrate_volume,
    restricted_volume,
    tail_bound,
    volume_jump,
)

__version__ = "0.1.0"

__all__ = [
    "DesignMatrix",
    "FitResult",
    "IntegrationConfig",
    "LassoPath",
    "ModelScore",
    "NotConvergedError",
    "VolumeEstimate",
    "approx_volume",
    "as_design",
    "bounds_check",
    "complexity_approx",
    "complexity_bic",
    "complexity_exact_volume",
    "degeneracy_report",
    "embed_phi",
    "fisher_info",
    "fit_lasso_path",
    "fit_mle",
    "integrate_volume",
    "max_loglik",
    "minor_sum_check",
    "minors",
    "restricted_volume",
    "score",
    "select",
    "tail_bound",
    "volume_density",
    "volume_jump",
]
