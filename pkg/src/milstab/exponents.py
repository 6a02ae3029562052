"""Discrete Lyapunov exponents of the Milstein and theta-Milstein schemes.

Mean-square exponents come in closed form: squaring the scheme gives
E(Z_n^2) = (x0^2 + y0^2) * base^n with

    base = 1 + (2*lam + epsilon^2 + sigma^2)*dt + mu*dt^2,

so the exponent of [E|Z_n|^2]^(1/2) is log(base)/(2*dt) exactly, for every n.
Almost-sure exponents are expectations (1/dt)*E log|factor| evaluated either
by Gauss-Hermite quadrature or by Monte Carlo over i.i.d. increments, with a
per-path slope estimator retained for trajectory plots. Convergence orders
against the continuum exponents are measured by log-log regression over
dt sweeps.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import (
    InitialDatum,
    ModelParams,
    continuum_as_exponent,
    continuum_ms_exponent,
)
from .scheme import (
    LOG_CLAMP,
    LogModulusPath,
    SchemeConfig,
    gamma_dt,
    mu,
    simulate_path,
    theta_eta,
)
from .stochastics import RngStream, gauss_hermite_rule

#: Sample block size for the Monte Carlo estimator. Each block owns the
#: substream (seed, block index) and partial sums combine in block order, so
#: the result is independent of worker count.
MC_BLOCK = 1 << 18

#: Relative tolerance of the node-doubling convergence check.
DOUBLING_RTOL = 1e-10

_MAX_NODES = 1024


class Method(Enum):
    MS_EXACT = "ms-exact"
    AS_QUADRATURE = "as-quad"
    AS_MONTE_CARLO = "as-mc"
    AS_PATH_SLOPE = "as-slope"
    THETA_MS_EXACT = "theta-ms"
    THETA_AS_QUADRATURE = "theta-as"


#: Methods whose estimates carry sampling error.
STOCHASTIC_METHODS = frozenset({Method.AS_MONTE_CARLO, Method.AS_PATH_SLOPE})

#: Methods targeting the mean-square continuum exponent; the rest target the
#: almost-sure one.
MS_METHODS = frozenset({Method.MS_EXACT, Method.THETA_MS_EXACT})


@dataclass(frozen=True)
class ExponentEstimate:
    """An exponent value with its method tag and, when stochastic, its error.

    std_error is present exactly for the Monte Carlo and path-slope methods.
    """

    value: float
    method: Method
    dt: float
    std_error: float | None = None
    n_samples: int | None = None

    def __post_init__(self) -> None:
        stochastic = self.method in STOCHASTIC_METHODS
        if stochastic and self.std_error is None:
            raise ValueError(f"std_error is required for method {self.method.value}")
        if not stochastic and self.std_error is not None:
            raise ValueError(f"std_error must be absent for method {self.method.value}")
        if self.std_error is not None and not self.std_error >= 0.0:
            raise ValueError(f"std_error must be nonnegative, got {self.std_error!r}")


@dataclass(frozen=True)
class ConvergenceFit:
    """Least-squares fit |error| ~ C * dt^p over a dt sweep.

    residual is the maximum absolute residual of the log10-log10 regression.
    """

    constant_C: float
    order_p: float
    residual: float
    dts: tuple[float, ...]
    errors: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.dts) != len(self.errors) or len(self.dts) < 3:
            raise ValueError("a fit needs at least 3 (dt, error) pairs of equal length")
        if not all(e > 0.0 for e in self.errors):
            raise ValueError("all errors must be positive for a log-log fit")
        if not self.constant_C > 0.0:
            raise ValueError(f"constant_C must be positive, got {self.constant_C!r}")


@dataclass(frozen=True)
class RemainderReport:
    """Truncated remainder series value with its explicit bound."""

    value: float
    bound: float
    terms_used: int
    converged: bool

    def __post_init__(self) -> None:
        if self.converged and not abs(self.value) <= self.bound + 1e-12:
            raise ValueError(
                f"converged remainder |{self.value!r}| exceeds its bound {self.bound!r}"
            )


def _ms_base_minus_one(p: ModelParams, dt: float) -> float:
    # base - 1 evaluated directly, so log1p keeps full relative precision in
    # the exponent; base itself is E[factor^2] >= 0 and vanishes only in the
    # degenerate deterministic case factor = 0.
    return (2.0 * p.lam + p.epsilon * p.epsilon + p.sigma * p.sigma) * dt + mu(p) * dt * dt


def ms_exponent_exact(p: ModelParams, dt: float) -> ExponentEstimate:
    """Exact mean-square exponent log(base)/(2*dt) of the Milstein scheme.

    Exact in n: the squared-modulus recursion is geometric, so the limsup is
    attained at every step. Errors out when base <= 0 (dt too large for the
    positivity restriction).
    """
    if not (0.0 < dt < 1.0):
        raise ValueError(f"dt must lie in (0, 1), got {dt!r}")
    m1 = _ms_base_minus_one(p, dt)
    if m1 <= -1.0:
        raise ValueError(f"squared-modulus base 1 + {m1!r} must be positive")
    return ExponentEstimate(value=math.log1p(m1) / (2.0 * dt), method=Method.MS_EXACT, dt=dt)


#: Truncation rule of the remainder series: stop before a term smaller than
#: this relative threshold, with a hard cap on the number of terms.
SERIES_RTOL = 1e-16
SERIES_CAP = 200


def ms_remainder(p: ModelParams, dt: float) -> RemainderReport:
    """Remainder R^ms(dt) of the mean-square exponent expansion, with bound.

    The series is mu*dt + sum over m >= 2 of ((-1)^(m-1)/m) * B^m * dt^(m-1),
    B = 2*(lam + epsilon^2/2 + sigma^2/2) + mu*dt, summed while terms stay
    above SERIES_RTOL * max(1, |partial|) up to SERIES_CAP terms. It converges
    under the contraction condition q = (2*|a| + mu*dt)*dt < 1 and satisfies

        2*(lam + epsilon^2/2 + sigma^2/2) + R^ms = 2 * ms_exponent_exact,

    which is the consistency identity used as an independent cross-check. The
    explicit bound is (mu + Bbar^2 / (1 - Bbar*dt)) * dt with Bbar = 2*|a| +
    mu*dt.
    """
    if not (0.0 < dt < 1.0):
        raise ValueError(f"dt must lie in (0, 1), got {dt!r}")
    a = continuum_ms_exponent(p)
    mu_ = mu(p)
    b_abs = 2.0 * abs(a) + mu_ * dt
    q = b_abs * dt
    if q >= 1.0:
        raise ValueError(f"series contraction q = {q!r} must be below 1; the remainder may diverge")
    b = 2.0 * a + mu_ * dt
    terms = [mu_ * dt]
    partial = terms[0]
    term = -0.5 * b * b * dt  # m = 2
    m = 2
    converged = False
    while m <= SERIES_CAP:
        if abs(term) < SERIES_RTOL * max(1.0, abs(partial)):
            converged = True
            break
        terms.append(term)
        partial += term
        term *= -b * dt * m / (m + 1.0)
        m += 1
    value = math.fsum(terms)
    bound = (mu_ + b_abs * b_abs / (1.0 - q)) * dt
    return RemainderReport(value=value, bound=bound, terms_used=len(terms), converged=converged)


def _expected_log_quadratic(c0: float, a1: float, a2: float, dt: float, nodes: int) -> float:
    """(1/dt) * E log(c0 + a1*Y + a2*Y^2) by Gauss-Hermite, with doubling check.

    The argument must stay positive over the node range (guaranteed by the
    gamma_dt > 3/4 style preconditions of the callers). Doubling the node
    count must move the value by less than DOUBLING_RTOL relative; at the
    1024-node cap the doubled rule is clamped and the check is void.
    """

    def at(n: int) -> float:
        rule = gauss_hermite_rule(n)
        y = rule.nodes
        arg = c0 + a1 * y + a2 * y * y
        return rule.integrate(np.log(arg)) / dt

    v1 = at(nodes)
    n2 = min(2 * int(nodes), _MAX_NODES)
    if n2 == nodes:
        return v1
    v2 = at(n2)
    diff = abs(v2 - v1)
    denom = max(abs(v1), abs(v2))
    if diff > DOUBLING_RTOL * denom and diff > 1e-22:
        raise ValueError(
            f"quadrature non-convergence: doubling {nodes} nodes moved the value by "
            f"{diff!r} (relative {diff / denom if denom else math.inf!r})"
        )
    return v1


def as_exponent_quadrature(p: ModelParams, dt: float, nodes: int = 201) -> ExponentEstimate:
    """Almost-sure exponent (1/dt) * E log(gamma + sigma*dB + (sigma^2/2)*dB^2).

    Substituting zeta = dB/sqrt(dt) turns the expectation into a standard
    normal integral evaluated by Gauss-Hermite quadrature. Requires
    gamma_dt > 3/4, which keeps the integrand's argument above 1/4 and away
    from the log singularity.
    """
    gamma = gamma_dt(p, dt)
    if not gamma > 0.75:
        raise ValueError(
            f"gamma_dt = {gamma!r} must exceed 3/4 for the almost-sure exponent estimators"
        )
    s = p.sigma * math.sqrt(dt)
    value = _expected_log_quadratic(gamma, s, 0.5 * s * s, dt, nodes)
    return ExponentEstimate(value=value, method=Method.AS_QUADRATURE, dt=dt)


def _mc_block_sums(gamma: float, sigma: float, dt: float, seed: int, block_id: int, count: int):
    stream = RngStream(root_seed=seed, stream_id=block_id)
    dB = math.sqrt(dt) * stream.normals(count)
    factors = gamma + sigma * dB + 0.5 * sigma * sigma * dB * dB
    af = np.abs(factors)
    zero = af == 0.0
    logs = np.where(zero, LOG_CLAMP, np.log(np.where(zero, 1.0, af)))
    return float(np.sum(logs)), float(np.sum(logs * logs))


def as_exponent_mc(
    p: ModelParams,
    dt: float,
    n_samples: int,
    seed: int,
    threads: int = 1,
) -> ExponentEstimate:
    """Strong-law Monte Carlo estimate of the almost-sure exponent.

    Averages log|factor| over n_samples i.i.d. increments and divides by dt;
    the standard error is the sample standard deviation over sqrt(n_samples),
    divided by dt. Sampling runs in fixed blocks with per-block substreams and
    the partial sums combine in block order, so the value is a pure function
    of (p, dt, n_samples, seed) regardless of threads.
    """
    gamma = gamma_dt(p, dt)
    if not gamma > 0.75:
        raise ValueError(
            f"gamma_dt = {gamma!r} must exceed 3/4 for the almost-sure exponent estimators"
        )
    if n_samples < 100:
        raise ValueError(f"n_samples must be at least 100, got {n_samples}")
    if p.sigma == 0.0:
        # Every sample contributes the constant log(gamma); the estimator's
        # value is exact and its sample deviation is identically zero.
        return ExponentEstimate(
            value=math.log(gamma) / dt,
            method=Method.AS_MONTE_CARLO,
            dt=dt,
            std_error=0.0,
            n_samples=n_samples,
        )
    blocks = []
    start = 0
    block_id = 0
    while start < n_samples:
        count = min(MC_BLOCK, n_samples - start)
        blocks.append((block_id, count))
        start += count
        block_id += 1

    def work(block) -> tuple[float, float]:
        bid, count = block
        return _mc_block_sums(gamma, p.sigma, dt, seed, bid, count)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(work, blocks))
    else:
        partials = [work(b) for b in blocks]

    total = 0.0
    total_sq = 0.0
    for s1, s2 in partials:  # fixed block order
        total += s1
        total_sq += s2
    mean = total / n_samples
    var = max(total_sq - n_samples * mean * mean, 0.0) / (n_samples - 1)
    return ExponentEstimate(
        value=mean / dt,
        method=Method.AS_MONTE_CARLO,
        dt=dt,
        std_error=math.sqrt(var / n_samples) / dt,
        n_samples=n_samples,
    )


def as_exponent_path_slope(paths: list[LogModulusPath]) -> ExponentEstimate:
    """Mean terminal slope (log|Z_n| - log|Z_0|) / t_n across trajectories.

    The statistic behind trajectory plots: each path contributes its terminal
    slope, and the standard error is the cross-path standard deviation over
    sqrt(number of paths). All paths must share dt and length.
    """
    if len(paths) < 2:
        raise ValueError(f"need at least 2 paths, got {len(paths)}")
    dt = paths[0].dt
    n = paths[0].n_steps
    for path in paths[1:]:
        if path.dt != dt or path.n_steps != n:
            raise ValueError("mismatched grids: all paths must share dt and n_steps")
    slopes = np.array([(path.log_values[-1] - path.log_values[0]) / (n * dt) for path in paths])
    return ExponentEstimate(
        value=float(slopes.mean()),
        method=Method.AS_PATH_SLOPE,
        dt=dt,
        std_error=float(slopes.std(ddof=1)) / math.sqrt(len(paths)),
        n_samples=len(paths),
    )


def _require_scalar(p: ModelParams) -> None:
    if p.epsilon != 0.0:
        raise ValueError(f"theta scheme requires epsilon = 0, got epsilon = {p.epsilon!r}")


def theta_ms_exponent(p: ModelParams, theta: float, dt: float) -> ExponentEstimate:
    """Exact mean-square exponent of the scalar theta-Milstein scheme.

    E(X_n^2) is geometric with ratio

        M = eta^2 + sigma^2*eta*dt/(1 - lam*theta*dt)
            + (sigma^2*dt + (3*sigma^4/4)*dt^2) / (1 - lam*theta*dt)^2,

    and the exponent of [E|X_n|^2]^(1/2) is log(M)/(2*dt). M - 1 is formed
    directly from eta - 1 = (lam - sigma^2/2)*dt / (1 - lam*theta*dt) so the
    small-dt exponent keeps full precision. The dt^2 moment coefficient is
    3*sigma^4/4, from E[(sigma*dB + (sigma^2/2)*dB^2)^2].
    """
    _require_scalar(p)
    eta = theta_eta(p, theta, dt)  # validates theta, dt, and the pole
    denom = 1.0 - p.lam * theta * dt
    s2 = p.sigma * p.sigma
    eta_m1 = (p.lam - 0.5 * s2) * dt / denom
    m1 = eta_m1 * (eta + 1.0) + s2 * eta * dt / denom + (s2 * dt + 0.75 * s2 * s2 * dt * dt) / (
        denom * denom
    )
    if m1 <= -1.0:
        raise ValueError(f"squared-modulus ratio 1 + {m1!r} must be positive")
    return ExponentEstimate(
        value=math.log1p(m1) / (2.0 * dt), method=Method.THETA_MS_EXACT, dt=dt
    )


def theta_as_exponent_quadrature(
    p: ModelParams, theta: float, dt: float, nodes: int = 201
) -> ExponentEstimate:
    """Almost-sure exponent of the scalar theta-Milstein scheme by quadrature.

    (1/dt) * E log(eta + (sigma*dB + (sigma^2/2)*dB^2)/(1 - lam*theta*dt)).
    Requires eta - 1/(2*(1 - lam*theta*dt)) > 0, which bounds the argument
    away from the log singularity by the same -1/2 noise floor as the plain
    scheme. With theta = 0 the evaluation coincides bit for bit with
    as_exponent_quadrature at epsilon = 0.
    """
    _require_scalar(p)
    eta = theta_eta(p, theta, dt)
    denom = 1.0 - p.lam * theta * dt
    if not eta - 0.5 / denom > 0.0:
        raise ValueError(
            f"eta - 1/(2*(1 - lam*theta*dt)) = {eta - 0.5 / denom!r} must be positive to keep "
            "the log argument away from the singularity"
        )
    s = p.sigma * math.sqrt(dt)
    value = _expected_log_quadratic(eta, s / denom, 0.5 * s * s / denom, dt, nodes)
    return ExponentEstimate(value=value, method=Method.THETA_AS_QUADRATURE, dt=dt)


def fit_loglog(dts, errors) -> ConvergenceFit:
    """Fit |error| ~ C * dt^p by least squares on log10-log10 axes."""
    dts = [float(d) for d in dts]
    errors = [float(e) for e in errors]
    if len(dts) != len(errors) or len(dts) < 3:
        raise ValueError("a fit needs at least 3 (dt, error) pairs of equal length")
    if any(e <= 0.0 for e in errors):
        raise ValueError("error below resolution: exact zero cannot enter a log-log fit")
    lx = np.log10(dts)
    ly = np.log10(errors)
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.max(np.abs(np.polyval([slope, intercept], lx) - ly)))
    return ConvergenceFit(
        constant_C=float(10.0**intercept),
        order_p=float(slope),
        residual=residual,
        dts=tuple(dts),
        errors=tuple(errors),
    )


def estimate(
    p: ModelParams,
    dt: float,
    method: Method,
    *,
    nodes: int = 201,
    theta: float | None = None,
    n_samples: int = 10**6,
    seed: int = 0,
    threads: int = 1,
    n_paths: int = 50,
    n_steps: int = 10**4,
    initial: InitialDatum | None = None,
) -> ExponentEstimate:
    """Dispatch a single-dt exponent estimate for the given method."""
    if method is Method.MS_EXACT:
        return ms_exponent_exact(p, dt)
    if method is Method.AS_QUADRATURE:
        return as_exponent_quadrature(p, dt, nodes)
    if method is Method.AS_MONTE_CARLO:
        return as_exponent_mc(p, dt, n_samples, seed, threads=threads)
    if method is Method.AS_PATH_SLOPE:
        datum = initial if initial is not None else InitialDatum(1.0, 0.0)
        cfg = SchemeConfig(dt=dt, n_steps=n_steps, initial=datum, seed=seed)
        paths = [
            simulate_path(p, cfg, RngStream(root_seed=seed, stream_id=i)) for i in range(n_paths)
        ]
        return as_exponent_path_slope(paths)
    if theta is None:
        raise ValueError(f"method {method.value} requires theta")
    if method is Method.THETA_MS_EXACT:
        return theta_ms_exponent(p, theta, dt)
    return theta_as_exponent_quadrature(p, theta, dt, nodes)


def continuum_target(p: ModelParams, method: Method) -> float:
    """The continuum exponent an estimator of this method converges to."""
    if method in MS_METHODS:
        return continuum_ms_exponent(p)
    return continuum_as_exponent(p)


def sweep_dt(p: ModelParams, dts, method: Method, **estimator_params) -> ConvergenceFit:
    """Errors |estimate(dt) - continuum exponent| fitted over a dt sweep.

    Estimator failures propagate; an exactly-zero error is reported as below
    resolution since it cannot enter the log-log regression.
    """
    dts = [float(d) for d in dts]
    if len(dts) < 3:
        raise ValueError("a sweep needs at least 3 step sizes")
    target = continuum_target(p, method)
    values = [estimate(p, dt, method, **estimator_params).value for dt in dts]
    errors = [abs(v - target) for v in values]
    return fit_loglog(dts, errors)
