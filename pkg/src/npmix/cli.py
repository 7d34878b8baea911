"""Command-line front end.

Subcommands: estimate, distance, rates, chi2, approx, compare.  Exit
codes: 0 success, 2 usage error (argparse), 1 runtime failure with a
diagnostic line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .divergences import DIVERGENCES
from .exceptions import NpmixError
from .experiments import (chi2_study, default_instance_suite, rate_study,
                          solver_comparison)
from .hermite import (coefficient_shape_ratio, default_test_functions,
                      sup_error_bound_factor, taylor_approx)
from .kernels import KernelSpec
from .measures import AtomicMeasure, EmpiricalPmf
from .solver import SolverConfig, solve
from .transport import GotConfig, got_w1, w1


def _positive(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return value


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="npmix",
                                description="mixing-distribution estimation "
                                            "and smoothed-transport tools")
    sub = p.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="fit a mixing distribution to samples")
    est.add_argument("--input", required=True, help="CSV of samples, one integer per row")
    est.add_argument("--kernel", choices=["poisson", "geometric"], default="poisson")
    est.add_argument("--theta-star", type=_positive, required=True)
    est.add_argument("--divergence", choices=sorted(DIVERGENCES), default="kl")
    est.add_argument("--method", choices=["vdm", "isdm"], default="vdm")
    est.add_argument("--out", required=True, help="output JSON for the fitted measure")
    est.add_argument("--trace", help="optional CSV for the iteration trace")
    est.add_argument("--grid-size", type=int, default=512)
    est.add_argument("--stop-tol", type=float, default=1e-8)
    est.add_argument("--max-iters", type=int, default=500)

    dist = sub.add_parser("distance", help="distances between two measures")
    dist.add_argument("--a", required=True)
    dist.add_argument("--b", required=True)
    dist.add_argument("--sigma", type=_positive)

    rates = sub.add_parser("rates", help="Monte Carlo convergence-rate study")
    rates.add_argument("--config", required=True, help="JSON study configuration")
    rates.add_argument("--out", required=True, help="output CSV")

    chi2p = sub.add_parser("chi2", help="chi-square tail-quantile study")
    chi2p.add_argument("--config", required=True)
    chi2p.add_argument("--out", required=True)

    approx = sub.add_parser("approx", help="polynomial approximation report")
    approx.add_argument("--sigma", type=_positive, required=True)
    approx.add_argument("--theta-star", type=_positive, required=True)
    approx.add_argument("--degrees", default="5,10,15",
                        help="comma-separated polynomial sizes k")
    approx.add_argument("--out", required=True)

    comp = sub.add_parser("compare", help="solver comparison table")
    comp.add_argument("--out", required=True)
    comp.add_argument("--config", help="optional JSON with solver overrides")
    return p


def read_samples_csv(path) -> np.ndarray:
    """One integer per row; a single non-numeric header row is allowed."""
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(int(float(text)))
            except ValueError:
                if i == 0:
                    continue
                raise NpmixError(f"malformed sample row {i + 1}: {text!r}") from None
    if not values:
        raise NpmixError(f"no samples found in {path}")
    return np.asarray(values, dtype=np.int64)


def _load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise NpmixError(f"malformed JSON in {path}: {exc}") from None


def _study_inputs(cfg: dict):
    kernel = KernelSpec.by_name(cfg.get("kernel", "poisson"),
                                float(cfg["theta_star"]))
    atoms = cfg.get("mixing_atoms")
    if atoms is None:
        ts = kernel.theta_star
        Q = AtomicMeasure(np.array([0.3 * ts, 0.8 * ts]),
                          np.array([0.5, 0.5]), ts)
    else:
        arr = np.asarray(atoms, dtype=float).reshape(-1, 2)
        Q = AtomicMeasure(arr[:, 0], arr[:, 1], kernel.theta_star)
    return kernel, Q


def _cmd_estimate(args) -> int:
    samples = read_samples_csv(args.input)
    kernel = KernelSpec.by_name(args.kernel, args.theta_star)
    emp = EmpiricalPmf.from_samples(samples)
    config = SolverConfig(divergence=args.divergence, grid_size=args.grid_size,
                          stop_tol=args.stop_tol, max_outer_iters=args.max_iters)
    measure, trace = solve(emp, kernel, config, args.method)
    measure.save(args.out)
    if args.trace:
        trace.to_csv(args.trace)
    print(f"fitted {measure.n_atoms} atoms in {trace.n_iters} iterations "
          f"({trace.status})")
    return 0


def _cmd_distance(args) -> int:
    a = AtomicMeasure.load(args.a)
    b = AtomicMeasure.load(args.b)
    print(f"w1 {w1(a, b)!r}")
    if args.sigma is not None:
        print(f"got_w1 {got_w1(a, b, GotConfig(sigma=args.sigma))!r}")
    return 0


def _cmd_rates(args) -> int:
    cfg = _load_json(args.config)
    kernel, Q = _study_inputs(cfg)
    report = rate_study(kernel, Q, cfg.get("divergence", "kl"),
                        cfg.get("method", "vdm"), cfg["n_grid"],
                        int(cfg["reps"]), float(cfg["sigma"]),
                        int(cfg.get("seed", 0)))
    report.to_csv(args.out)
    print(f"slope_got {report.slope_got!r}")
    print(f"slope_w1 {report.slope_w1!r}")
    return 0


def _cmd_chi2(args) -> int:
    cfg = _load_json(args.config)
    kernel, Q = _study_inputs(cfg)
    report = chi2_study(kernel, Q, cfg["n_grid"], int(cfg["reps"]),
                        float(cfg.get("delta", 0.05)), int(cfg.get("seed", 0)))
    report.to_csv(args.out)
    print(f"fitted_c {report.fitted_c!r}")
    print(f"all_below {report.all_below}")
    return 0


def _cmd_approx(args) -> int:
    degrees = [int(s) for s in args.degrees.split(",") if s]
    if not degrees or any(k < 1 for k in degrees):
        raise NpmixError(f"invalid degree list {args.degrees!r}")
    fns = default_test_functions(args.theta_star)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("function,degree,coeff_shape_ratio,sup_error,bound_value\n")
        for fn in fns:
            for k in degrees:
                appr = taylor_approx(fn, args.sigma, k, args.theta_star)
                ratio = coefficient_shape_ratio(appr)
                bound = sup_error_bound_factor(k, args.sigma, args.theta_star)
                fh.write(f"{fn.name},{k},{ratio!r},{appr.sup_error!r},{bound!r}\n")
    print(f"wrote {len(fns) * len(degrees)} rows to {args.out}")
    return 0


def _cmd_compare(args) -> int:
    overrides = {}
    if args.config:
        overrides = _load_json(args.config)
    config = None
    if overrides:
        config = SolverConfig(**{k: v for k, v in overrides.items()
                                 if k in SolverConfig.__dataclass_fields__})
    table = solver_comparison(default_instance_suite(), config)
    table.to_csv(args.out)
    bad = [r for r in table.rows if r.error]
    if bad:
        raise NpmixError(f"{len(bad)} comparison cells failed; see {args.out}")
    print(f"max objective gap {table.max_gap()!r}")
    return 0


_COMMANDS = {
    "estimate": _cmd_estimate,
    "distance": _cmd_distance,
    "rates": _cmd_rates,
    "chi2": _cmd_chi2,
    "approx": _cmd_approx,
    "compare": _cmd_compare,
}


def run(argv) -> int:
    """Parse ``argv`` (without the program name) and execute; returns exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return _COMMANDS[args.command](args)
    except (NpmixError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
