"""Stability of Milstein discretizations for a 2x2 linear test system.

The library computes discrete Lyapunov exponents, mean-square in closed form
and almost-sure via quadrature or Monte Carlo, for the Milstein scheme of the
planar conformal system

    dX = lam*X dt + (sigma*X - epsilon*Y) dW
    dY = lam*Y dt + (epsilon*X + sigma*Y) dW

whose modulus |Z_n| = sqrt(X_n^2 + Y_n^2) multiplies by the scalar factor
gamma_dt + sigma*dB + (sigma^2/2)*dB^2 each step, together with the scalar
theta-Milstein family at epsilon = 0. It also verifies the logarithm sandwich
bounds behind the sharp two-sided exponent estimates. See the README for the
exponent formulas and the command line interface.
"""

from .exponents import (
    MC_BLOCK,
    MS_METHODS,
    STOCHASTIC_METHODS,
    ConvergenceFit,
    ExponentEstimate,
    Method,
    RemainderReport,
    as_exponent_mc,
    as_exponent_path_slope,
    as_exponent_quadrature,
    continuum_target,
    estimate,
    fit_loglog,
    ms_exponent_exact,
    ms_remainder,
    sweep_dt,
    theta_as_exponent_quadrature,
    theta_ms_exponent,
)
from .lemmas import (
    BoundKind,
    LogBoundDomain,
    SandwichReport,
    composite_increment_moments,
    gaussian_moment,
    log_lower_surrogate,
    log_upper_surrogate,
    verify_log_sandwich,
    xi_expectation,
    xi_gamma,
)
from .model import (
    BOUNDARY_TOL,
    InitialDatum,
    ModelParams,
    RegionClass,
    Sense,
    StabilityClass,
    as_boundary_epsilon,
    classify,
    continuum_as_exponent,
    continuum_ms_exponent,
)
from .scheme import (
    LOG_CLAMP,
    LogModulusPath,
    SchemeConfig,
    gamma_dt,
    milstein_factor,
    mu,
    simulate_path,
    simulate_theta_path,
    theta_eta,
)
from .stochastics import QuadratureRule, RngStream, gauss_hermite_rule

__version__ = "0.1.0"

__all__ = [
    "BOUNDARY_TOL",
    "BoundKind",
    "ConvergenceFit",
    "ExponentEstimate",
    "InitialDatum",
    "LOG_CLAMP",
    "LogBoundDomain",
    "LogModulusPath",
    "MC_BLOCK",
    "MS_METHODS",
    "Method",
    "ModelParams",
    "QuadratureRule",
    "RegionClass",
    "RemainderReport",
    "RngStream",
    "SandwichReport",
    "SchemeConfig",
    "Sense",
    "STOCHASTIC_METHODS",
    "StabilityClass",
    "as_boundary_epsilon",
    "as_exponent_mc",
    "as_exponent_path_slope",
    "as_exponent_quadrature",
    "classify",
    "composite_increment_moments",
    "continuum_as_exponent",
    "continuum_ms_exponent",
    "continuum_target",
    "estimate",
    "fit_loglog",
    "gamma_dt",
    "gauss_hermite_rule",
    "gaussian_moment",
    "log_lower_surrogate",
    "log_upper_surrogate",
    "milstein_factor",
    "ms_exponent_exact",
    "ms_remainder",
    "mu",
    "simulate_path",
    "simulate_theta_path",
    "sweep_dt",
    "theta_as_exponent_quadrature",
    "theta_eta",
    "theta_ms_exponent",
    "verify_log_sandwich",
    "xi_expectation",
    "xi_gamma",
]
