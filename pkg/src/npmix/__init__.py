"""Minimum-distance estimation of mixing distributions in discrete mixtures.

The package fits the latent mixing distribution of a discrete
exponential-family mixture (Poisson, Geometric, or custom kernels) by
minimizing a decomposable distance between the observed and model PMFs;
with the KL divergence this is the nonparametric MLE.  It also ships
exact 1-D Wasserstein and Gaussian-smoothed Wasserstein distances,
Hermite-based polynomial approximation tools, and seeded Monte Carlo
study harnesses.
"""

from .divergences import (DIVERGENCES, GeneralizedDivergence, chain_check,
                          chi2_exact, evaluate, get_divergence)
from .estimator import MinimumDistanceMixture
from .exceptions import (ConfigurationError, DegenerateMeasureError,
                         NpmixError, NumericalError, StudyError,
                         SupportViolationError)
from .experiments import (Chi2Report, Instance, RateReport, chi2_study,
                          default_instance_suite, rate_study, sample_mixture,
                          solver_comparison)
from .hermite import (LipschitzTestFn, TaylorApprox, default_test_functions,
                      hermite_he, smoothed_derivative, smoothed_value,
                      taylor_approx)
from .kernels import KernelSpec
from .measures import AtomicMeasure, EmpiricalPmf, canonicalize
from .solver import (SolverConfig, SolverTrace, directional_derivative,
                     fully_corrective_weights, isdm, min_directional_derivative,
                     objective, oracle_grid_solver, solve, vdm)
from .transport import GotConfig, got_w1, smoothed_cdf, w1

__version__ = "0.1.0"

__all__ = [
    "AtomicMeasure", "EmpiricalPmf", "canonicalize",
    "KernelSpec",
    "DIVERGENCES", "GeneralizedDivergence", "get_divergence", "evaluate",
    "chain_check", "chi2_exact",
    "SolverConfig", "SolverTrace", "objective", "directional_derivative",
    "min_directional_derivative", "vdm", "isdm", "solve",
    "fully_corrective_weights", "oracle_grid_solver",
    "GotConfig", "w1", "got_w1", "smoothed_cdf",
    "LipschitzTestFn", "TaylorApprox", "hermite_he", "smoothed_value",
    "smoothed_derivative", "taylor_approx", "default_test_functions",
    "sample_mixture", "rate_study", "chi2_study", "solver_comparison",
    "RateReport", "Chi2Report", "Instance", "default_instance_suite",
    "MinimumDistanceMixture",
    "NpmixError", "SupportViolationError", "DegenerateMeasureError",
    "NumericalError", "ConfigurationError", "StudyError",
]
