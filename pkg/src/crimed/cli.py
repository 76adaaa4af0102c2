"""Command-line front end: ``crimed run-experiment | compute-kl | check-concentration | lower-bound``."""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

from . import concentration
from .config import ExperimentConfig, load_config
from .corrupted_kl import check_eps, delta_min, kl_eps_gauss, kl_eps_gauss_derivative, solve_c
from .environments import PRESETS
from .errors import ConfigError, DomainError
from .simulator import lower_bound_report, monte_carlo

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
REGRET_HEADER = ("checkpoint", "mean_regret", "p5", "p95")
SUMMARY_HEADER = ("policy", "arm", "gap", "mean_pulls", "lower_bound_slope", "mean_final_regret",
                  "p5_final_regret", "p95_final_regret", "mean_final_realized_regret")
CONCENTRATION_HEADER = ("n", "y", "eps", "adversary", "empirical_freq", "bound")
KL_DEVIATION_HEADER = ("n", "y", "shift", "eps", "adversary", "empirical_freq", "bound")


def fmt(x) -> str:
    """Locale-independent number text; ``inf`` for infinite slopes, empty for missing."""
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".12g")


def _write_csv(path_or_stream, header, rows) -> None:
    if isinstance(path_or_stream, (str, Path)):
        with open(path_or_stream, "w", newline="", encoding="ascii") as fh:
            _write_csv(fh, header, rows)
        return
    writer = csv.writer(path_or_stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])


def _usage(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _experiment_config(args) -> ExperimentConfig:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        config = load_config(args.config)
    elif args.preset:
        config = ExperimentConfig.for_preset(args.preset)
    else:
        raise ConfigError("one of --config or --preset is required")
    data = config.to_dict()
    overrides = {"reps": args.reps, "master_seed": args.seed, "horizon": args.horizon,
                 "output": args.output}
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    if args.policies:
        data["policies"] = [p.strip() for p in args.policies.split(",") if p.strip()]
    return ExperimentConfig.from_dict(data)


def cmd_run_experiment(args) -> int:
    try:
        config = _experiment_config(args)
        instance = config.build_instance()
    except (ConfigError, DomainError, OSError) as exc:
        return _usage(str(exc))
    try:
        report = lower_bound_report(instance)
        out = Path(config.output)
        out.mkdir(parents=True, exist_ok=True)
        summaries = []
        for policy in config.policies:
            summary = monte_carlo(instance, policy, config.horizon, config.reps, config.master_seed,
                                  config.checkpoints, args.workers)
            summaries.append(summary)
            if not args.quiet:
                print(f"{summary.policy}: mean final regret {summary.mean_regret[-1]:.2f} "
                      f"({summary.wall_seconds:.1f}s)", file=sys.stderr)
        # All files are written once every policy has finished.
        for summary in summaries:
            _write_csv(out / f"regret_{summary.policy}.csv", REGRET_HEADER,
                       zip(summary.checkpoints, summary.mean_regret, summary.p5, summary.p95))
        rows = []
        for summary in summaries:
            for arm in range(instance.n_arms):
                rows.append((summary.policy, arm, instance.gaps[arm], summary.mean_counts[arm],
                             report.slopes[arm], summary.mean_regret[-1],
                             summary.p5[-1], summary.p95[-1], summary.mean_realized_regret[-1]))
        _write_csv(out / "summary.csv", SUMMARY_HEADER, rows)
    except (DomainError, ConfigError) as exc:
        return _usage(str(exc))
    except Exception as exc:  # noqa: BLE001 - report any runtime failure as exit 1
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def cmd_compute_kl(args) -> int:
    try:
        eps = check_eps(args.eps)
    except DomainError as exc:
        return _usage(str(exc))
    gap = args.y - args.x
    dmin = delta_min(eps)
    kl = kl_eps_gauss(args.x, args.y, eps)
    if eps == 0.0:
        c = d_plus = d_minus = math.nan
    elif gap <= dmin:
        c, d_plus, d_minus = 1.0, gap, gap
    else:
        sol = solve_c(gap, eps)
        c, d_plus, d_minus = sol.c, sol.delta_plus, sol.delta_minus
    derivative = kl_eps_gauss_derivative(args.x, max(gap, 0.0), eps)
    for key, value in (("x", args.x), ("y", args.y), ("eps", eps), ("delta", gap), ("delta_min", dmin),
                       ("kl", kl), ("c", c), ("delta_plus", d_plus), ("delta_minus", d_minus),
                       ("derivative", derivative)):
        print(f"{key}={fmt(value)}")
    return EXIT_OK


def cmd_check_concentration(args) -> int:
    try:
        for e in args.eps:
            check_eps(e)
            if e == 0.0:
                raise DomainError("eps must be positive for the concentration check")
        if any(not 0.0 <= y <= 1.0 for y in args.y):
            raise DomainError("every y must lie in [0, 1]")
        if any(n < 1 for n in args.n) or args.reps < 1:
            raise DomainError("sample sizes and reps must be positive")
    except DomainError as exc:
        return _usage(str(exc))
    if args.kl_deviation:
        rows = concentration.kl_deviation_table(args.n, args.y, args.shift, args.eps, args.adversaries,
                                                args.reps, seed=args.seed)
        header = KL_DEVIATION_HEADER
        values = [(r.n, r.y, r.shift, r.eps, r.adversary, r.empirical_freq, r.bound) for r in rows]
    else:
        rows = concentration.median_domination_table(args.n, args.y, args.eps, args.adversaries,
                                                     args.reps, seed=args.seed)
        header = CONCENTRATION_HEADER
        values = [(r.n, r.y, r.eps, r.adversary, r.empirical_freq, r.bound) for r in rows]
    if args.output:
        _write_csv(args.output, header, values)
    else:
        _write_csv(sys.stdout, header, values)
    failed = [r for r in rows if not r.passed]
    for r in failed:
        print(f"violation: {r}", file=sys.stderr)
    return EXIT_FAILURE if failed else EXIT_OK


def cmd_lower_bound(args) -> int:
    try:
        if args.config:
            instance = load_config(args.config).build_instance()
        else:
            instance = ExperimentConfig.for_preset(args.preset).build_instance()
        report = lower_bound_report(instance, args.eps)
    except (ConfigError, DomainError, OSError) as exc:
        return _usage(str(exc))
    _write_csv(sys.stdout, ("arm", "gap", "standardized_gap", "slope"),
               [(a, g, sg, s) for a, (g, sg, s) in
                enumerate(zip(report.gaps, report.standardized_gaps, report.slopes))])
    print(f"regret_coefficient={fmt(report.regret_coefficient)}", file=sys.stderr)
    return EXIT_OK


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crimed", description=__doc__, allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run-experiment", allow_abbrev=False, help="Monte-Carlo regret curves for a preset or config file")
    p.add_argument("--config", help="JSON experiment configuration")
    p.add_argument("--preset", choices=PRESETS, help="built-in setting (alternative to --config)")
    p.add_argument("--reps", type=_positive_int, help="override the number of repetitions")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--horizon", type=int, help="override the horizon T")
    p.add_argument("--policies", help="comma-separated policy names overriding the config")
    p.add_argument("--output", help="output directory for the CSV files")
    p.add_argument("--workers", type=_positive_int, help="worker processes (capped by CRIMED_THREADS)")
    p.add_argument("--quiet", action="store_true", help="suppress progress lines on stderr")
    p.set_defaults(func=cmd_run_experiment)

    p = sub.add_parser("compute-kl", allow_abbrev=False, help="corrupted Gaussian divergence and its Huber-pair constants")
    p.add_argument("--x", type=float, required=True, help="left mean")
    p.add_argument("--y", type=float, required=True, help="right mean")
    p.add_argument("--eps", type=float, required=True, help="corruption level in [0, 0.5)")
    p.set_defaults(func=cmd_compute_kl)

    p = sub.add_parser("check-concentration", allow_abbrev=False, help="Monte-Carlo check of the median tail bound")
    p.add_argument("--n", type=int, nargs="+", default=list(concentration.DEFAULT_NS), help="sample sizes")
    p.add_argument("--y", type=float, nargs="+", default=list(concentration.DEFAULT_YS), help="deviations in [0, 1]")
    p.add_argument("--eps", type=float, nargs="+", default=list(concentration.DEFAULT_EPSS), help="corruption levels")
    p.add_argument("--adversaries", nargs="+", choices=concentration.ADVERSARIES,
                   default=list(concentration.ADVERSARIES), help="corruption laws to test")
    p.add_argument("--reps", type=int, default=10_000, help="Monte-Carlo repetitions per grid point")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--kl-deviation", action="store_true",
                   help="check the divergence deviation event instead of the raw median tail")
    p.add_argument("--shift", type=float, nargs="+", default=[0.1, 0.3],
                   help="mean shifts for --kl-deviation")
    p.add_argument("--output", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_check_concentration)

    p = sub.add_parser("lower-bound", allow_abbrev=False, help="asymptotic 1/kl slopes per suboptimal arm")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", choices=PRESETS)
    group.add_argument("--config")
    p.add_argument("--eps", type=float, help="override the corruption level")
    p.set_defaults(func=cmd_lower_bound)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
