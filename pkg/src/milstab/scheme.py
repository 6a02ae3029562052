"""Milstein and theta-Milstein recursions for the modulus, in log space.

One step of the Milstein scheme multiplies the modulus by

    gamma_dt + sigma*dB + (sigma^2/2)*dB^2,
    gamma_dt = 1 + (lam + epsilon^2/2 - sigma^2/2)*dt,

with dB ~ N(0, dt). The drift-implicit theta variant (scalar case,
epsilon = 0) multiplies by

    eta_dt + (sigma*dB + (sigma^2/2)*dB^2) / (1 - lam*theta*dt),
    eta_dt = (1 + (lam*(1-theta) - sigma^2/2)*dt) / (1 - lam*theta*dt).

Trajectories are accumulated as sums of log|factor|; the raw product would
overflow within a few hundred steps for blow-up parameters, so |Z_n| itself
is never materialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import InitialDatum, ModelParams
from .stochastics import RngStream

#: Log contribution recorded for a step whose factor underflows to exactly 0
#: in floating point (a measure-zero event). Near the most negative log a
#: double can carry; the step is flagged rather than aborting the batch.
LOG_CLAMP = -745.0


@dataclass(frozen=True)
class SchemeConfig:
    """Step size, horizon, initial datum, seed, and optional implicitness.

    theta absent means the plain Milstein scheme; theta in [0, 1] selects the
    drift-implicit variant. The step size must satisfy 0 < dt < 1. The
    well-posedness condition 1 - lam*theta*dt > 0 involves the drift and is
    checked when a trajectory is generated.
    """

    dt: float
    n_steps: int
    initial: InitialDatum
    seed: int
    theta: float | None = None

    def __post_init__(self) -> None:
        if not (0.0 < self.dt < 1.0):
            raise ValueError(f"dt must lie in (0, 1), got {self.dt!r}")
        if not isinstance(self.n_steps, (int, np.integer)) or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps!r}")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.theta is not None and not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta!r}")


@dataclass(frozen=True)
class LogModulusPath:
    """A trajectory of log|Z_n| on the grid t_n = n*dt.

    log_values has length n_steps + 1 and starts at log sqrt(x0^2 + y0^2).
    flags marks, per step, factors that underflowed to zero and had their log
    contribution clamped; all other entries are finite.
    """

    dt: float
    log_values: np.ndarray
    flags: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.log_values.ndim != 1 or self.flags.ndim != 1:
            raise ValueError("log_values and flags must be 1-d arrays")
        if len(self.flags) != len(self.log_values) - 1:
            raise ValueError("flags must have one entry per step")

    @property
    def n_steps(self) -> int:
        return len(self.log_values) - 1

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)


def gamma_dt(p: ModelParams, dt: float) -> float:
    """Deterministic part of the one-step Milstein factor."""
    if not (0.0 < dt < 1.0):
        raise ValueError(f"dt must lie in (0, 1), got {dt!r}")
    return 1.0 + (p.lam + 0.5 * p.epsilon * p.epsilon - 0.5 * p.sigma * p.sigma) * dt


def mu(p: ModelParams) -> float:
    """Second-order drift-moment constant of the squared-modulus recursion.

    mu = lam^2 + lam*epsilon^2 + epsilon^4/4 + sigma^4/2, which equals
    (lam + epsilon^2/2)^2 + sigma^4/2 and is therefore nonnegative.
    """
    lam, eps, sig = p.lam, p.epsilon, p.sigma
    return lam * lam + lam * eps * eps + 0.25 * eps**4 + 0.5 * sig**4


def milstein_factor(p: ModelParams, dt: float, dB: float) -> float:
    """One-step multiplicative factor gamma_dt + sigma*dB + (sigma^2/2)*dB^2.

    The noise part equals ((sigma*dB + 1)^2 - 1) / 2 >= -1/2, so the factor is
    bounded below by gamma_dt - 1/2 for every increment. In particular it is
    strictly positive whenever gamma_dt > 3/4.
    """
    return gamma_dt(p, dt) + p.sigma * dB + 0.5 * p.sigma * p.sigma * dB * dB


def _accumulate(log0: float, factors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    af = np.abs(factors)
    flags = af == 0.0
    logs = np.where(flags, LOG_CLAMP, np.log(np.where(flags, 1.0, af)))
    log_values = np.empty(len(factors) + 1)
    log_values[0] = log0
    log_values[1:] = log0 + np.cumsum(logs)
    return log_values, flags


def simulate_path(p: ModelParams, cfg: SchemeConfig, stream: RngStream) -> LogModulusPath:
    """Generate one Milstein trajectory of log|Z_n|.

    Draws n_steps increments dB = sqrt(dt)*zeta from the stream, accumulates
    log|factor| step by step, and flags (without aborting) any step whose
    factor underflows to zero.
    """
    if cfg.theta is not None:
        raise ValueError("cfg.theta must be absent for the plain Milstein scheme")
    dt = cfg.dt
    gamma = gamma_dt(p, dt)
    dB = math.sqrt(dt) * stream.normals(cfg.n_steps)
    noise = p.sigma * dB + 0.5 * p.sigma * p.sigma * dB * dB
    factors = gamma + noise
    log0 = 0.5 * math.log(cfg.initial.squared_modulus())
    log_values, flags = _accumulate(log0, factors)
    return LogModulusPath(dt=dt, log_values=log_values, flags=flags)


def theta_eta(p: ModelParams, theta: float, dt: float) -> float:
    """Deterministic part eta_dt of the theta-Milstein factor.

    Requires 1 - lam*theta*dt > 0; at that pole the implicit step is
    ill-posed. For theta = 0 (and epsilon = 0) eta_dt reduces to gamma_dt.
    """
    if not (0.0 < dt < 1.0):
        raise ValueError(f"dt must lie in (0, 1), got {dt!r}")
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta!r}")
    denom = 1.0 - p.lam * theta * dt
    if denom <= 0.0:
        raise ValueError(
            f"implicit step ill-posed: 1 - lam*theta*dt = {denom!r} must be positive"
        )
    return (1.0 + (p.lam * (1.0 - theta) - 0.5 * p.sigma * p.sigma) * dt) / denom


def simulate_theta_path(p: ModelParams, cfg: SchemeConfig, stream: RngStream) -> LogModulusPath:
    """Generate one theta-Milstein trajectory of log|X_n| (scalar case).

    The theta scheme is defined for the scalar equation, so epsilon must be 0.
    With theta = 0 the per-step factor coincides bit for bit with the plain
    Milstein factor on shared increments.
    """
    if p.epsilon != 0.0:
        raise ValueError(f"theta scheme requires epsilon = 0, got epsilon = {p.epsilon!r}")
    if cfg.theta is None:
        raise ValueError("cfg.theta is required for the theta scheme")
    dt = cfg.dt
    eta = theta_eta(p, cfg.theta, dt)
    denom = 1.0 - p.lam * cfg.theta * dt
    dB = math.sqrt(dt) * stream.normals(cfg.n_steps)
    noise = p.sigma * dB + 0.5 * p.sigma * p.sigma * dB * dB
    factors = eta + noise / denom
    log0 = 0.5 * math.log(cfg.initial.squared_modulus())
    log_values, flags = _accumulate(log0, factors)
    return LogModulusPath(dt=dt, log_values=log_values, flags=flags)
