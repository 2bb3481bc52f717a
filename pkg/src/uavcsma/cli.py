"""Command line front end.

Subcommands: model (solve one scenario), simulate (Monte Carlo replicates),
sweep (model vs simulation along an axis, CSV out), plot (SVG charts from a
sweep CSV), validate (the acceptance suite). Exit codes: 0 ok, 1 usage or
parse error, 2 solver failure, 3 acceptance failure.
"""

from __future__ import annotations

import argparse
import sys

from .acceptance import run_checks
from .config import RunConfig, load_config
from .errors import ConfigError, ConvergenceError, InfeasibleScenarioError
from .experiments import agreement_report, run_sweep
from .model import solve_fixed_point
from .reporting import format_sweep_rows, read_sweep_csv, write_charts, write_sweep_csv
from .simulator import replicate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOLVER = 2
EXIT_ACCEPTANCE = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load(path: str | None) -> RunConfig:
    return RunConfig() if path is None else load_config(path)


def _cmd_model(args) -> int:
    config = _load(args.config)
    sc = config.scenario
    solution = solve_fixed_point(sc, config.solver)
    cs = solution.cluster_set

    print(f"scenario  R={sc.radius:g} m  v={sc.velocity:g} m/s  "
          f"rho={sc.density * 1e6:g} /km^2  cw={sc.schedule.cw_min}  "
          f"L={sc.schedule.retry_limit}  mode={sc.timing.access_mode.value}")
    print(f"clusters  N={len(solution.clusters)}  "
          f"traversal_cost={solution.delta * 1e-6:.6f} s  "
          f"residual_rim_area={cs.residual_area:.6g} m^2")
    print(f"{'i':>4} {'area_m2':>12} {'mean_count':>11} {'tau':>11} "
          f"{'q_busy':>11} {'quit':>11}")
    for cluster, state in zip(cs.clusters, solution.clusters):
        print(f"{cluster.index:>4} {cluster.area:>12.6g} "
              f"{cluster.mean_count:>11.6g} {state.tau:>11.6g} "
              f"{state.q_busy:>11.6g} {state.quit:>11.6g}")
    print(f"channel   P_tr={solution.p_tr:.8g}  P_s={solution.p_s:.8g}")
    print(f"S = {solution.throughput:.8g}")
    outer, inner = solution.iterations
    print(f"iterations  outer={outer}  inner={inner}")
    print("csv:radius_m,velocity_mps,density_per_km2,cw_min,retry_limit,mode,"
          "n_clusters,delta_s,p_tr,p_s,S")
    print(f"csv:{sc.radius:g},{sc.velocity:g},{sc.density * 1e6:g},"
          f"{sc.schedule.cw_min},{sc.schedule.retry_limit},"
          f"{sc.timing.access_mode.value},{len(solution.clusters)},"
          f"{solution.delta * 1e-6:.10g},{solution.p_tr:.10g},"
          f"{solution.p_s:.10g},{solution.throughput:.10g}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    config = _load(args.config)
    n_seeds = config.n_seeds if args.seeds is None else args.seeds
    if n_seeds < 1:
        raise ConfigError(f"--seeds must be >= 1, got {n_seeds}")
    summary = replicate(config.sim_config(), n_seeds)
    print(f"simulate  seeds={summary.n_seeds}  first_seed={config.seed}")
    print(f"{'seed':>6} {'S':>10} {'events':>10} {'successes':>10} "
          f"{'collisions':>11} {'drops':>7}  flag")
    for report in summary.reports:
        flag = "low-events" if report.low_confidence else "-"
        print(f"{report.seed:>6} {report.normalized_throughput:>10.6f} "
              f"{report.n_events:>10} {report.successes:>10} "
              f"{report.collisions:>11} {report.drops:>7}  {flag}")
    print(f"S_mean = {summary.mean:.6f}  ci95 = {summary.ci95:.6f}  "
          f"(Student-t over {summary.n_seeds} seeds)")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = _load(args.config)
    rows = run_sweep(config.sweep_spec())
    csv_path = args.csv if args.csv is not None else config.csv_path
    write_sweep_csv(rows, csv_path)
    print(format_sweep_rows(rows), end="")
    summary = agreement_report(rows)
    print(f"# wrote {csv_path}")
    print(f"# points={summary.n_points} solver_failures={summary.n_failed} "
          f"max_abs_err={summary.max_abs_err:.6g} "
          f"mean_abs_err={summary.mean_abs_err:.6g} "
          f"in_ci={summary.fraction_in_ci:.3f}")
    for row in rows:
        if row.note:
            print(f"# note {row.axis.value}={row.value:g} "
                  f"{row.mode.value}: {row.note}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    rows = read_sweep_csv(args.csv)
    if not rows:
        raise ValueError(f"{args.csv}: no data rows to plot")
    for path in write_charts(rows, args.out_dir):
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    if args.config is not None:
        _load(args.config)        # a broken config file is still a usage error
    only = None
    if args.only:
        try:
            only = tuple(int(part) for part in args.only.split(",") if part)
        except ValueError:
            raise ConfigError(f"--only expects check numbers, got {args.only!r}")
    results = run_checks(only, echo=print)
    n_failed = sum(1 for r in results if not r.passed)
    print(f"{len(results) - n_failed}/{len(results)} checks passed")
    return EXIT_ACCEPTANCE if n_failed else EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="uavcsma",
                     description="Saturation throughput of CSMA/CA under a "
                                 "moving circular coverage: quitting-chain "
                                 "model and slotted Monte Carlo simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("model", help="solve the analytic model for one scenario")
    p.add_argument("config", nargs="?", help="INI config (defaults when omitted)")
    p.set_defaults(fn=_cmd_model)

    p = sub.add_parser("simulate", help="run Monte Carlo replicates")
    p.add_argument("config", nargs="?", help="INI config (defaults when omitted)")
    p.add_argument("--seeds", type=int, default=None,
                   help="number of replicate seeds (overrides the config)")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("sweep", help="model vs simulation along the configured axis")
    p.add_argument("config", nargs="?", help="INI config (defaults when omitted)")
    p.add_argument("--csv", default=None, help="output CSV path (overrides the config)")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("plot", help="render SVG charts from a sweep CSV")
    p.add_argument("csv", help="CSV written by the sweep subcommand")
    p.add_argument("--out-dir", default="plots", help="chart directory")
    p.set_defaults(fn=_cmd_plot)

    p = sub.add_parser("validate", help="run the acceptance suite")
    p.add_argument("config", nargs="?",
                   help="INI config; parsed for validity, the checks pin "
                        "their own scenarios")
    p.add_argument("--only", default=None,
                   help="comma-separated check numbers, e.g. 1,2,7")
    p.set_defaults(fn=_cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, InfeasibleScenarioError) as err:
        print(f"solver error: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


__all__ = ["main"]
