"""Command-line front end.

Subcommands: ``run`` applies a procedure to a CSV dataset, ``thresholds``
tabulates asymptotic detection boundaries, ``simulate`` runs a Monte Carlo
scenario (preset or explicit) and ``plot-data`` reshapes results for plotting.

Exit codes: 0 success, 1 bad input data, 2 bad configuration or usage.
"""

import argparse
import contextlib
import sys

from . import asymptotics as asym
from . import csvio
from .errors import ConfigurationError, DataError, TsmtError
from .methods import METHOD_NAMES, ProcedureSpec, run_method
from .presets import PRESETS, scenario_preset
from .procedures import compute_stats
from .simulation import ScenarioConfig, ThresholdGrid, estimate_metrics

SIGMA_MODES = {"known": "known_unit", "estimated": "estimated"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


def _procedure_flags(p, multiple=False):
    if multiple:
        p.add_argument("--method", action="append", choices=METHOD_NAMES,
                       help="procedure to evaluate (repeatable)")
    else:
        p.add_argument("--method", choices=METHOD_NAMES, default="ts-bonf")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--selection-level", type=float, default=None,
                   help="null selection probability; overrides --gamma")
    p.add_argument("--sigma", choices=tuple(SIGMA_MODES), default="known")
    p.add_argument("--split-r", type=float, default=0.5)
    p.add_argument("--split-df", choices=("n1-1", "n1"), default="n1-1")
    p.add_argument("--hc-reps", type=int, default=10_000)
    p.add_argument("--hc-seed", type=int, default=0)


def build_parser():
    parser = _Parser(prog="tsmt", description="Two-stage multiple testing toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="apply a procedure to a dataset")
    run.add_argument("--data", required=True, help="CSV file, one hypothesis per row")
    run.add_argument("--skip-header", action="store_true")
    _procedure_flags(run)
    run.add_argument("--out", help="decisions CSV (default: stdout)")

    thr = sub.add_parser("thresholds", help="asymptotic detection thresholds")
    thr.add_argument("--d", type=float, action="append", help="log(m)/n limit (repeatable)")
    thr.add_argument("--gamma", type=float, default=0.5)
    thr.add_argument("--optimize", action="store_true", help="use the threshold-minimizing gamma")
    thr.add_argument("--split-r", type=float, default=None)
    thr.add_argument("--preset", choices=("fig4_1",))
    thr.add_argument("--out")

    sim = sub.add_parser("simulate", help="Monte Carlo estimates of FWER and power")
    sim.add_argument("--preset", choices=PRESETS)
    sim.add_argument("--reps", type=int, default=2000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--mean-mode", choices=("constant", "uniform_pm1"), default=None)
    sim.add_argument("--m", type=int)
    sim.add_argument("--n", type=int, default=15)
    sim.add_argument("--signals", type=int, default=0)
    sim.add_argument("--rho", type=float, default=0.0)
    sim.add_argument("--dependence", choices=("independent", "equal_correlation", "block"))
    sim.add_argument("--block-size", type=int)
    sim.add_argument("--variance-mode", choices=("unit", "common_uniform", "per_hypothesis_uniform"),
                     default="unit")
    sim.add_argument("--variance-range", type=float, nargs=2, default=(0.5, 1.5), metavar=("LO", "HI"))
    sim.add_argument("--mean-value", type=float, default=1.0)
    sim.add_argument("--fixed-means", action="store_true", help="draw nonzero means once, not per replication")
    _procedure_flags(sim, multiple=True)
    sim.add_argument("--out")

    plot = sub.add_parser("plot-data", help="reshape results into (figure, panel, x, series, y, se)")
    plot.add_argument("results", help="CSV written by simulate or thresholds")
    plot.add_argument("--out")
    return parser


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as handle:
            yield handle


def _spec(args, method):
    return ProcedureSpec(
        method, alpha=args.alpha, gamma=args.gamma, sigma_mode=SIGMA_MODES[args.sigma],
        selection_level=args.selection_level, split_r=args.split_r,
        split_df_rule=args.split_df, hc_reps=args.hc_reps, hc_seed=args.hc_seed,
    )


def cmd_run(args):
    data = csvio.read_dataset(args.data, skip_header=args.skip_header)
    spec = _spec(args, args.method)
    stats = compute_stats(data)
    result = run_method(spec, data, stats)
    with _output(args.out) as handle:
        csvio.write_rows(handle, csvio.DECISION_COLUMNS, csvio.decision_rows(stats, result))
    parts = [f"method={spec.method}", f"m={result.m}", f"selected={result.n_selected}",
             f"rejections={result.rejected.size}"]
    if result.sigma2_hat is not None:
        parts.append(f"sigma2_hat={csvio.fmt(result.sigma2_hat)}")
    if result.global_decision is not None:
        parts.append(f"global_reject={int(result.global_decision)}")
    print(" ".join(parts), file=sys.stdout if args.out else sys.stderr)
    return 0


def _threshold_reports(d_values, gamma, optimize, split_r):
    out = []
    for d in d_values:
        if d < 0:
            raise ConfigurationError(f"d must be nonnegative, got {d}")
        g_used = asym.optimal_gamma(d)[0] if optimize else gamma
        regime = asym.AsymptoticRegime(d=d, gamma=g_used, r=split_r)
        out.append((d, g_used, None, optimize, asym.detection_threshold("two_stage", regime)))
        out.append((d, None, None, None, asym.detection_threshold("bonferroni_t", regime)))
        out.append((d, None, None, None, asym.detection_threshold("bonferroni_z", regime)))
        if split_r is not None:
            out.append((d, g_used, split_r, optimize, asym.detection_threshold("split_sample", regime)))
    return out


def _write_thresholds(out_path, d_values, gamma, optimize, split_r, figure=""):
    rows = csvio.threshold_rows(_threshold_reports(d_values, gamma, optimize, split_r), figure)
    with _output(out_path) as handle:
        csvio.write_rows(handle, csvio.THRESHOLD_COLUMNS, rows)


def cmd_thresholds(args):
    if args.preset:
        grid = scenario_preset(args.preset)
        _write_thresholds(args.out, grid.d_values, args.gamma, True, args.split_r, grid.figure)
        return 0
    if not args.d:
        raise ConfigurationError("thresholds needs --d or --preset")
    _write_thresholds(args.out, args.d, args.gamma, args.optimize, args.split_r)
    return 0


def _explicit_scenario(args):
    if args.m is None:
        raise ConfigurationError("simulate needs --preset or --m")
    methods = tuple(_spec(args, name) for name in (args.method or ["ts-bonf"]))
    dependence = args.dependence or ("equal_correlation" if args.rho > 0 else "independent")
    return ScenarioConfig(
        m=args.m, n=args.n, procedures=methods, signal_count=args.signals, rho=args.rho,
        dependence=dependence, block_size=args.block_size, variance_mode=args.variance_mode,
        variance_range=tuple(args.variance_range), mean_mode=args.mean_mode or "uniform_pm1",
        mean_value=args.mean_value, redraw_means=not args.fixed_means,
        replications=args.reps, base_seed=args.seed, scenario_id="custom",
        figure="custom", panel="", x_name="", x=float("nan"),
    )


def cmd_simulate(args):
    if args.reps < 1:
        raise ConfigurationError("--reps must be at least 1")
    if args.preset:
        cells = scenario_preset(args.preset, reps=args.reps, seed=args.seed, mean_mode=args.mean_mode)
        if isinstance(cells, ThresholdGrid):
            _write_thresholds(args.out, cells.d_values, args.gamma, True, None, cells.figure)
            return 0
    else:
        cells = [_explicit_scenario(args)]
    rows = []
    for cell in cells:
        rows.extend(csvio.result_rows(cell, estimate_metrics(cell)))
    with _output(args.out) as handle:
        csvio.write_rows(handle, csvio.RESULT_COLUMNS, rows)
    return 0


def cmd_plot_data(args):
    try:
        with open(args.results, newline="") as handle:
            points = csvio.plot_rows(handle)
    except OSError as exc:
        raise DataError(f"cannot read {args.results}: {exc.strerror or exc}") from None
    with _output(args.out) as handle:
        csvio.write_rows(handle, csvio.PLOT_COLUMNS, points)
    return 0


COMMANDS = {
    "run": cmd_run,
    "thresholds": cmd_thresholds,
    "simulate": cmd_simulate,
    "plot-data": cmd_plot_data,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"tsmt: data error: {exc}", file=sys.stderr)
        return 1
    except (TsmtError, ValueError) as exc:
        print(f"tsmt: configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
