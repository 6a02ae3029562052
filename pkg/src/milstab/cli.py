"""Command line front end.

Subcommands:

    simulate   log-modulus trajectories on a time grid, one column per path
    exponent   a single exponent estimate at one step size, as JSON
    sweep-dt   estimates across step sizes with a log-log convergence fit
    region     almost-sure stability boundary across a range of sigma
    verify     self-check suites: lemmas, moments, closedform, all

Parameter precedence is built-in defaults, then --config JSON, then explicit
flags. All randomness derives from (--seed, stream index) pairs and partial
results combine in index order, so outputs are byte-identical across runs and
across --threads settings. CSV output is UTF-8 with LF line endings, a header
row, floats rendered by repr, and '# key=value' provenance comments above the
header (sorted by key; --threads and --out are execution detail and excluded).

Exit codes: 0 success, 1 failed verification or unwritable output, 2 bad
configuration or an estimator precondition violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .exponents import (
    MS_METHODS,
    Method,
    continuum_target,
    estimate,
    fit_loglog,
)
from .lemmas import (
    composite_increment_moments,
    gaussian_moment,
    verify_log_sandwich,
    xi_gamma,
)
from .model import (
    InitialDatum,
    ModelParams,
    Sense,
    as_boundary_epsilon,
    classify,
)
from .scheme import SchemeConfig, gamma_dt, mu, simulate_path, simulate_theta_path
from .stochastics import RngStream, gauss_hermite_rule

DEFAULTS = {
    "lam": 8.0,
    "epsilon": 2.0,
    "sigma": 4.0,
    "dt": 1e-3,
    "steps": 10000,
    "paths": 50,
    "seed": 42,
    "nodes": 201,
    "samples": 10**6,
    "theta": None,
    "dts": "1e-1,1e-2,1e-3,1e-4,1e-5",
    "sigma_range": "0:5:0.05",
    "suite": "all",
    "format": None,
    "x0": 1.0,
    "y0": 0.0,
}

_FLOAT_KEYS = {"lam", "epsilon", "sigma", "dt", "x0", "y0"}
_INT_KEYS = {"steps", "paths", "seed", "nodes", "samples"}
_STR_KEYS = {"dts", "sigma_range", "suite", "format"}

#: Accepted config-file spellings, normalized to internal names. --threads,
#: --out, and the positional method are command line only.
_CONFIG_ALIASES = {
    "lambda": "lam",
    "sigma-range": "sigma_range",
}


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(key: str, value):
    if key == "theta":
        if value is None:
            return None
        return float(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _INT_KEYS:
        iv = int(value)
        if iv != value:
            raise ValueError(f"config key {key!r} must be an integer, got {value!r}")
        return iv
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ValueError(f"config key {key!r} must be a string, got {value!r}")
        return value
    raise ValueError(f"unknown config key {key!r}")


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValueError(f"config {path} must hold a JSON object")
    merged = {}
    for key, value in raw.items():
        name = _CONFIG_ALIASES.get(key, str(key).replace("-", "_"))
        if name not in DEFAULTS:
            raise ValueError(f"unknown config key {key!r}")
        merged[name] = _coerce(name, value)
    return merged


def _resolve(ns: argparse.Namespace, default_format: str) -> dict:
    values = dict(DEFAULTS)
    config = getattr(ns, "config", None)
    if config is not None:
        values.update(_load_config(config))
    for key in DEFAULTS:
        flag = getattr(ns, key, None)
        if flag is not None:
            values[key] = flag
    if values["format"] is None:
        values["format"] = default_format
    if values["format"] not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {values['format']!r}")
    if values["suite"] not in ("lemmas", "moments", "closedform", "all"):
        raise ValueError(f"unknown verify suite {values['suite']!r}")
    threads = getattr(ns, "threads", None)
    values["threads"] = 1 if threads is None else int(threads)
    if values["threads"] < 1:
        raise ValueError(f"threads must be at least 1, got {values['threads']}")
    return values


def _parse_dts(text: str) -> list[float]:
    parts = [part.strip() for part in text.split(",") if part.strip()]
    if not parts:
        raise ValueError(f"no step sizes in {text!r}")
    return [float(part) for part in parts]


def _parse_sigma_range(text: str) -> list[float]:
    pieces = text.split(":")
    if len(pieces) != 3:
        raise ValueError(f"sigma range must look like lo:hi:step, got {text!r}")
    lo, hi, step = (float(piece) for piece in pieces)
    if not step > 0.0:
        raise ValueError(f"sigma range step must be positive, got {step!r}")
    if hi < lo:
        raise ValueError(f"sigma range is empty: {text!r}")
    count = int(math.floor((hi - lo) / step + 1e-9))
    sigmas = [lo + i * step for i in range(count + 1)]
    if sigmas and sigmas[-1] > hi + 1e-9 * max(1.0, step):
        sigmas.pop()
    return sigmas


def _provenance_lines(pairs: dict) -> list[str]:
    return [f"# {key}={_fmt(value)}" for key, value in sorted(pairs.items())]


def _csv_text(pairs: dict, header: list[str], rows: list[list]) -> str:
    lines = _provenance_lines(pairs)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(field) for field in row))
    return "\n".join(lines) + "\n"


def _emit(text: str, out: str | None) -> int:
    if out is None:
        sys.stdout.write(text)
        return 0
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        return 1
    return 0


def _map_indexed(fn, count: int, threads: int) -> list:
    if threads > 1 and count > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(count)))
    return [fn(i) for i in range(count)]


def _model(values: dict) -> ModelParams:
    return ModelParams(lam=values["lam"], epsilon=values["epsilon"], sigma=values["sigma"])


def _cmd_simulate(ns: argparse.Namespace) -> int:
    values = _resolve(ns, default_format="csv")
    p = _model(values)
    datum = InitialDatum(values["x0"], values["y0"])
    theta = values["theta"]
    cfg = SchemeConfig(
        dt=values["dt"], n_steps=values["steps"], initial=datum, seed=values["seed"], theta=theta
    )
    n_paths = values["paths"]
    if n_paths < 1:
        raise ValueError(f"paths must be at least 1, got {n_paths}")

    def one(index: int):
        stream = RngStream(root_seed=values["seed"], stream_id=index)
        if theta is None:
            return simulate_path(p, cfg, stream)
        return simulate_theta_path(p, cfg, stream)

    paths = _map_indexed(one, n_paths, values["threads"])
    matrix = np.column_stack([path.log_values for path in paths])
    t = paths[0].times()
    mean = matrix.mean(axis=1)
    pairs = {
        "lambda": values["lam"],
        "epsilon": values["epsilon"],
        "sigma": values["sigma"],
        "dt": values["dt"],
        "steps": values["steps"],
        "paths": n_paths,
        "seed": values["seed"],
        "x0": values["x0"],
        "y0": values["y0"],
    }
    if theta is not None:
        pairs["theta"] = theta
    header = ["t"] + [f"path_{i}" for i in range(n_paths)] + ["mean"]
    rows = [
        [float(t[k])] + [float(matrix[k, j]) for j in range(n_paths)] + [float(mean[k])]
        for k in range(len(t))
    ]
    if values["format"] == "json":
        obj = {"params": pairs, "columns": header, "rows": rows}
        return _emit(json.dumps(obj) + "\n", ns.out)
    return _emit(_csv_text(pairs, header, rows), ns.out)


def _estimator_kwargs(method: Method, values: dict) -> dict:
    return {
        "nodes": values["nodes"],
        "theta": values["theta"],
        "n_samples": values["samples"],
        "seed": values["seed"],
        "threads": values["threads"],
        "n_paths": values["paths"],
        "n_steps": values["steps"],
        "initial": InitialDatum(values["x0"], values["y0"]),
    }


def _method_pairs(method: Method, values: dict) -> dict:
    pairs = {
        "method": method.value,
        "lambda": values["lam"],
        "epsilon": values["epsilon"],
        "sigma": values["sigma"],
    }
    if method in (Method.AS_QUADRATURE, Method.THETA_AS_QUADRATURE):
        pairs["nodes"] = values["nodes"]
    if method is Method.AS_MONTE_CARLO:
        pairs["samples"] = values["samples"]
        pairs["seed"] = values["seed"]
    if method is Method.AS_PATH_SLOPE:
        pairs["paths"] = values["paths"]
        pairs["steps"] = values["steps"]
        pairs["seed"] = values["seed"]
        pairs["x0"] = values["x0"]
        pairs["y0"] = values["y0"]
    if method in (Method.THETA_MS_EXACT, Method.THETA_AS_QUADRATURE):
        pairs["theta"] = values["theta"]
    return pairs


def _cmd_exponent(ns: argparse.Namespace) -> int:
    values = _resolve(ns, default_format="json")
    method = Method(ns.method if ns.method is not None else "as-quad")
    p = _model(values)
    try:
        est = estimate(p, values["dt"], method, **_estimator_kwargs(method, values))
    except ValueError as exc:
        if values["format"] == "json":
            sys.stdout.write(json.dumps({"error": str(exc)}) + "\n")
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 2
    target = continuum_target(p, method)
    sense = Sense.MEAN_SQUARE if method in MS_METHODS else Sense.ALMOST_SURE
    region = classify(p, sense)
    obj = {"method": method.value, "dt": values["dt"], "value": est.value}
    if est.std_error is not None:
        obj["std_error"] = est.std_error
    obj["continuum_value"] = target
    obj["region_class"] = region.class_.value
    if values["format"] == "csv":
        header = ["method", "dt", "value", "std_error", "continuum_value", "region_class"]
        row = [
            method.value,
            values["dt"],
            est.value,
            "" if est.std_error is None else est.std_error,
            target,
            region.class_.value,
        ]
        return _emit(_csv_text(_method_pairs(method, values), header, row and [row]), ns.out)
    return _emit(json.dumps(obj) + "\n", ns.out)


def _fit_object(fit) -> dict:
    return {
        "constant_C": fit.constant_C,
        "order_p": fit.order_p,
        "residual": fit.residual,
        "dts": list(fit.dts),
        "errors": list(fit.errors),
    }


def _cmd_sweep_dt(ns: argparse.Namespace) -> int:
    values = _resolve(ns, default_format="csv")
    method = Method(ns.method if ns.method is not None else "as-quad")
    dts = _parse_dts(values["dts"])
    p = _model(values)
    target = continuum_target(p, method)
    kwargs = _estimator_kwargs(method, values)
    rows = []
    fit_points = []
    for dt in dts:
        try:
            value = estimate(p, dt, method, **kwargs).value
        except ValueError as exc:
            rows.append({"dt": dt, "error": str(exc)})
            continue
        err = abs(value - target)
        rows.append({"dt": dt, "discrete_value": value, "abs_error": err})
        if err > 0.0:
            fit_points.append((dt, err))
    fit = None
    if len(fit_points) >= 3:
        fit = fit_loglog([d for d, _ in fit_points], [e for _, e in fit_points])
    pairs = _method_pairs(method, values)
    pairs["dts"] = values["dts"]
    header = ["dt", "discrete_value", "continuum_value", "abs_error"]
    csv_rows = []
    for row in rows:
        if "error" in row:
            csv_rows.append([row["dt"], "error", target, "error"])
        else:
            csv_rows.append([row["dt"], row["discrete_value"], target, row["abs_error"]])

    if values["format"] == "json":
        json_rows = []
        for row in rows:
            entry = {"dt": row["dt"], "continuum_value": target}
            if "error" in row:
                entry["discrete_value"] = None
                entry["abs_error"] = None
                entry["error"] = row["error"]
            else:
                entry["discrete_value"] = row["discrete_value"]
                entry["abs_error"] = row["abs_error"]
            json_rows.append(entry)
        obj = {
            "params": pairs,
            "rows": json_rows,
            "fit": None if fit is None else _fit_object(fit),
        }
        code = _emit(json.dumps(obj) + "\n", ns.out)
        if code != 0:
            return code
        if fit is None:
            print("error: fewer than 3 usable step sizes, no convergence fit", file=sys.stderr)
            return 1
        return 0

    text = _csv_text(pairs, header, csv_rows)
    if ns.out is None:
        if fit is not None:
            text += f"# fit={json.dumps(_fit_object(fit))}\n"
        sys.stdout.write(text)
        if fit is None:
            print("error: fewer than 3 usable step sizes, no convergence fit", file=sys.stderr)
            return 1
        return 0
    code = _emit(text, ns.out)
    if code != 0:
        return code
    if fit is None:
        print("error: fewer than 3 usable step sizes, no convergence fit", file=sys.stderr)
        return 1
    fit_text = json.dumps(_fit_object(fit)) + "\n"
    code = _emit(fit_text, ns.out + ".fit.json")
    if code != 0:
        return code
    sys.stdout.write(fit_text)
    return 0


def _cmd_region(ns: argparse.Namespace) -> int:
    values = _resolve(ns, default_format="csv")
    lam = values["lam"]
    sigmas = _parse_sigma_range(values["sigma_range"])
    pairs = {"lambda": lam, "sigma-range": values["sigma_range"]}
    header = ["sigma", "epsilon_boundary_plus", "epsilon_boundary_minus", "class_at_epsilon_0"]
    rows = []
    for sigma in sigmas:
        boundary = as_boundary_epsilon(lam, sigma)
        if len(boundary) == 2:
            minus, plus = boundary
        elif len(boundary) == 1:
            minus = plus = boundary[0]
        else:
            minus = plus = None
        at_zero = ModelParams(lam=lam, epsilon=0.0, sigma=sigma)
        label = classify(at_zero, Sense.ALMOST_SURE).class_.value
        rows.append({"sigma": sigma, "plus": plus, "minus": minus, "label": label})
    if values["format"] == "json":
        obj = {
            "params": pairs,
            "rows": [
                {
                    "sigma": row["sigma"],
                    "epsilon_boundary_plus": row["plus"],
                    "epsilon_boundary_minus": row["minus"],
                    "class_at_epsilon_0": row["label"],
                }
                for row in rows
            ],
        }
        return _emit(json.dumps(obj) + "\n", ns.out)
    csv_rows = [
        [
            row["sigma"],
            "" if row["plus"] is None else row["plus"],
            "" if row["minus"] is None else row["minus"],
            row["label"],
        ]
        for row in rows
    ]
    return _emit(_csv_text(pairs, header, csv_rows), ns.out)


def _check(name: str, passed: bool, detail: str) -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def _suite_lemmas(values: dict) -> list[dict]:
    gammas = (0.75, 1.0, 2.0, 10.0)
    report = verify_log_sandwich(gammas, n_points=10**5, tol=-1e-12)
    checks = [
        _check(
            "lemmas.sandwich",
            report.passed,
            f"{report.upper_violations + report.lower_violations} violations over "
            f"{report.n_points} points, worst margins {report.worst_upper_margin!r} (upper) "
            f"and {report.worst_lower_margin!r} (lower)",
        )
    ]
    worst = 0.0
    for gamma in gammas:
        for x in (1e-12, -1e-12):
            worst = max(worst, abs(xi_gamma(gamma, x)))
    checks.append(
        _check(
            "lemmas.xi_continuity",
            worst < 1e-20,
            f"|xi| at x = +-1e-12 stays below 1e-20, worst {worst!r}",
        )
    )
    worst_xi = -math.inf
    for gamma in gammas:
        lo = -2.0 * gamma / 3.0 * (1.0 - 1e-9)
        for x in np.linspace(lo, 10.0 * gamma, 2001):
            worst_xi = max(worst_xi, xi_gamma(gamma, float(x)))
    checks.append(
        _check(
            "lemmas.xi_nonpositive",
            worst_xi <= 0.0,
            f"max of xi over the sampled domain is {worst_xi!r}",
        )
    )
    return checks


def _suite_moments(values: dict) -> list[dict]:
    sigma = values["sigma"]
    dt = values["dt"]
    n = values["samples"]
    mean_ref, second_ref = composite_increment_moments(sigma, dt)
    stream = RngStream(root_seed=values["seed"], stream_id=0)
    dB = math.sqrt(dt) * stream.normals(n)
    noise = sigma * dB + 0.5 * sigma * sigma * dB * dB
    z_scores = []
    for data, ref in ((noise, mean_ref), (noise * noise, second_ref)):
        se = float(data.std(ddof=1)) / math.sqrt(n)
        z_scores.append(abs(float(data.mean()) - ref) / se if se > 0.0 else 0.0)
    checks = [
        _check(
            "moments.composite_vs_mc",
            max(z_scores) <= 4.0,
            f"mean and second moment within 4 standard errors, z = "
            f"{z_scores[0]:.3f} and {z_scores[1]:.3f} over {n} samples",
        )
    ]
    rule = gauss_hermite_rule(values["nodes"])
    worst_rel = 0.0
    for order in range(2, 21, 2):
        ref = gaussian_moment(order, 1.0)
        got = rule.integrate(rule.nodes**order)
        worst_rel = max(worst_rel, abs(got - ref) / ref)
    checks.append(
        _check(
            "moments.hermite_even_moments",
            worst_rel <= 1e-12,
            f"orders 2..20 against closed-form moments, worst relative error {worst_rel!r}",
        )
    )
    weight_defect = abs(float(rule.weights.sum()) - 1.0)
    checks.append(
        _check(
            "moments.weight_sum",
            weight_defect <= 1e-14,
            f"|sum of weights - 1| = {weight_defect!r}",
        )
    )
    return checks


def _suite_closedform(values: dict) -> list[dict]:
    p = _model(values)
    dt = values["dt"]
    n_steps = 10
    n_paths = 10**5
    datum = InitialDatum(values["x0"], values["y0"])
    m1 = (2.0 * p.lam + p.epsilon * p.epsilon + p.sigma * p.sigma) * dt + mu(p) * dt * dt
    base = 1.0 + m1
    stream = RngStream(root_seed=values["seed"], stream_id=0)
    dB = math.sqrt(dt) * stream.normals(n_paths * n_steps).reshape(n_paths, n_steps)
    factors = gamma_dt(p, dt) + p.sigma * dB + 0.5 * p.sigma * p.sigma * dB * dB
    squared = datum.squared_modulus() * np.prod(factors * factors, axis=1)
    mean = float(squared.mean())
    se = float(squared.std(ddof=1)) / math.sqrt(n_paths)
    ref = datum.squared_modulus() * base**n_steps
    z = abs(mean - ref) / se if se > 0.0 else 0.0
    return [
        _check(
            "closedform.second_moment",
            z <= 3.0,
            f"E(Z_n^2) at n = {n_steps} within 3 standard errors of base^n, z = {z:.3f} "
            f"over {n_paths} paths",
        )
    ]


_SUITES = {
    "lemmas": _suite_lemmas,
    "moments": _suite_moments,
    "closedform": _suite_closedform,
}


def _cmd_verify(ns: argparse.Namespace) -> int:
    values = _resolve(ns, default_format="csv")
    suite = values["suite"]
    names = list(_SUITES) if suite == "all" else [suite]
    checks = []
    for name in names:
        checks.extend(_SUITES[name](values))
    for check in checks:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"{check['name']}: {status} - {check['detail']}")
    all_passed = all(check["passed"] for check in checks)
    if ns.out is not None:
        report = {"suite": suite, "passed": all_passed, "checks": checks}
        code = _emit(json.dumps(report, indent=2) + "\n", ns.out)
        if code != 0:
            return code
    return 0 if all_passed else 1


def _add_model_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--lambda", dest="lam", type=float, help="drift coefficient")
    sub.add_argument("--epsilon", type=float, help="rotational noise intensity")
    sub.add_argument("--sigma", type=float, help="radial noise intensity")
    sub.add_argument("--dt", type=float, help="time step")
    sub.add_argument("--seed", type=int, help="root seed for all substreams")


def _add_io_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON file of parameter defaults")
    sub.add_argument("--out", help="write output to this path instead of stdout")
    sub.add_argument("--threads", type=int, help="worker threads (output is thread-invariant)")


_METHOD_SLUGS = [m.value for m in Method]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="milstab",
        description="Discrete Lyapunov exponents of Milstein schemes for a 2x2 linear test system",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("simulate", help="write log-modulus trajectories")
    _add_model_flags(sim)
    _add_io_flags(sim)
    sim.add_argument("--steps", type=int, help="number of time steps")
    sim.add_argument("--paths", type=int, help="number of independent paths")
    sim.add_argument("--theta", type=float, help="implicitness parameter (requires epsilon 0)")
    sim.add_argument("--format", choices=["csv", "json"], help="output format (default csv)")
    sim.set_defaults(func=_cmd_simulate)

    exp = commands.add_parser("exponent", help="one exponent estimate as JSON")
    exp.add_argument("method", nargs="?", choices=_METHOD_SLUGS, help="estimator (default as-quad)")
    _add_model_flags(exp)
    _add_io_flags(exp)
    exp.add_argument("--steps", type=int, help="steps per path for as-slope")
    exp.add_argument("--paths", type=int, help="paths for as-slope")
    exp.add_argument("--theta", type=float, help="implicitness parameter for theta methods")
    exp.add_argument("--nodes", type=int, help="quadrature node count")
    exp.add_argument("--samples", type=int, help="Monte Carlo sample count")
    exp.add_argument("--format", choices=["csv", "json"], help="output format (default json)")
    exp.set_defaults(func=_cmd_exponent)

    sweep = commands.add_parser("sweep-dt", help="estimates across step sizes with a fit")
    sweep.add_argument(
        "method", nargs="?", choices=_METHOD_SLUGS, help="estimator (default as-quad)"
    )
    _add_model_flags(sweep)
    _add_io_flags(sweep)
    sweep.add_argument("--steps", type=int, help="steps per path for as-slope")
    sweep.add_argument("--paths", type=int, help="paths for as-slope")
    sweep.add_argument("--theta", type=float, help="implicitness parameter for theta methods")
    sweep.add_argument("--nodes", type=int, help="quadrature node count")
    sweep.add_argument("--samples", type=int, help="Monte Carlo sample count")
    sweep.add_argument("--dts", help="comma separated step sizes")
    sweep.add_argument("--format", choices=["csv", "json"], help="output format (default csv)")
    sweep.set_defaults(func=_cmd_sweep_dt)

    region = commands.add_parser("region", help="almost-sure stability boundary over sigma")
    region.add_argument("--lambda", dest="lam", type=float, help="drift coefficient")
    region.add_argument("--sigma-range", dest="sigma_range", help="sigma grid as lo:hi:step")
    _add_io_flags(region)
    region.add_argument("--format", choices=["csv", "json"], help="output format (default csv)")
    region.set_defaults(func=_cmd_region)

    verify = commands.add_parser("verify", help="run self-check suites")
    verify.add_argument(
        "--suite", choices=["lemmas", "moments", "closedform", "all"], help="which checks to run"
    )
    _add_model_flags(verify)
    _add_io_flags(verify)
    verify.add_argument("--nodes", type=int, help="quadrature node count")
    verify.add_argument("--samples", type=int, help="Monte Carlo sample count")
    verify.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
