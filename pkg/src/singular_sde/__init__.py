"""Simulation and statistics for additive-noise equations with a singular drift
driven by fractional Brownian motion."""

__version__ = "0.1.0"

from .drift import DriftSpec, check_admissibility, drift_root, eval_b, eval_b_dot, make_drift
from .errors import (
    AdmissibilityError,
    DegenerateInputError,
    DomainError,
    NumericalFailure,
    ParameterError,
    ResourceError,
)
from .estimate import EstimationResult, estimate_from_observations, hurst_estimator, quadratic_variation, sigma_estimator
from .noise import FbmPath, NoiseConfig, coupled_bm_fbm, gauss_2f1, sample_fbm, volterra_kernel
from .scheme import EulerPath, TimeGrid, convergence_study, implicit_step, solve_langevin_path, solve_path
from .transform import build_cir_model, build_verhulst_model, lamperti_backward, lamperti_forward, theta_continuous, theta_discrete

__all__ = [
    "AdmissibilityError", "DegenerateInputError", "DomainError", "DriftSpec", "EstimationResult", "EulerPath",
    "FbmPath", "NoiseConfig", "NumericalFailure", "ParameterError", "ResourceError", "TimeGrid",
    "build_cir_model", "build_verhulst_model", "check_admissibility", "convergence_study", "coupled_bm_fbm",
    "drift_root", "estimate_from_observations", "eval_b", "eval_b_dot", "gauss_2f1", "hurst_estimator",
    "implicit_step", "lamperti_backward", "lamperti_forward", "make_drift", "quadratic_variation",
    "sample_fbm", "sigma_estimator", "solve_langevin_path", "solve_path", "theta_continuous", "theta_discrete",
    "volterra_kernel",
]
