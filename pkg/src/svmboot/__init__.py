"""Kernel machines with smooth convex losses, their bootstrap, and influence functions."""

from .bootstrap import BootstrapEnsemble, bootstrap_ensemble, draw_multinomial_weights
from .errors import ConfigError, ConvergenceError, InputError, NumericError
from .influence import (
    AsymptoticLaw,
    InfluenceModel,
    asymptotic_law,
    build_influence_model,
    influence_function,
    sample_gaussian,
)
from .kernel import GramMatrix, KernelSpec, eval_kernel, gram_matrix, rkhs_norm_sq
from .law import (
    EmpiricalLaw,
    bounded_lipschitz_distance,
    kolmogorov_distance,
    percentile_ci,
    quantile,
)
from .loss import LossEval, SmoothLoss, envelope_certificate, evaluate, smoothed_hinge
from .solver import Dataset, SvmFit, WeightedSample, decision_function, evaluate_on_grid, fit

__version__ = "0.1.0"

__all__ = [
    "AsymptoticLaw", "BootstrapEnsemble", "ConfigError", "ConvergenceError", "Dataset",
    "EmpiricalLaw", "GramMatrix", "InfluenceModel", "InputError", "KernelSpec", "LossEval",
    "NumericError", "SmoothLoss", "SvmFit", "WeightedSample", "asymptotic_law",
    "bootstrap_ensemble", "bounded_lipschitz_distance", "build_influence_model",
    "decision_function", "draw_multinomial_weights", "envelope_certificate", "eval_kernel",
    "evaluate", "evaluate_on_grid", "fit", "gram_matrix", "influence_function",
    "kolmogorov_distance", "percentile_ci", "quantile", "rkhs_norm_sq", "sample_gaussian",
    "smoothed_hinge",
]
