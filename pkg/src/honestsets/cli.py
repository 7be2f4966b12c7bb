"""Command-line entry point ``honestsets``.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import DomainError, HonestSetsError

log = logging.getLogger("honestsets")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# flag -> SimConfig field; every flag defaults to None so the config file wins unless given
_RUN_FLAGS = {
    "design": ("design", str), "beta_mode": ("beta_mode", str), "b": ("b", float),
    "n": ("n", int), "p": ("p", int), "s": ("s", int), "sigma2": ("sigma2", float),
    "alpha": ("alpha", float), "lambda_rule": ("lambda_rule", str), "methods": ("methods", str),
    "criterion": ("criterion", str), "reps": ("replicates", int), "seed": ("master_seed", int),
    "setting_id": ("setting_id", int), "n_sim_c_o": ("n_sim_c_o", int),
    "n_sim_c_l": ("n_sim_c_l", int), "nu": ("nu", float), "K": ("K", float),
    "eta_cv": ("eta_cv", float), "eta_1se": ("eta_1se", float),
}


def _add_threads(p):
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: $HONESTSETS_THREADS or the number of cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="honestsets", description="Honest confidence sets for high-dimensional regression means.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    run = sub.add_parser("run", help="simulate one setting")
    run.add_argument("--config", type=Path, help="JSON file with SimConfig fields")
    for flag, (_, typ) in _RUN_FLAGS.items():
        opt = "--" + flag.replace("_", "-")
        run.add_argument(opt, dest=flag, type=typ, default=None)
    run.add_argument("--strict-multi", action="store_true", default=None,
                     help="radii valid simultaneously over all candidate sets")
    run.add_argument("--sigma-power", type=int, choices=(1, 2), default=None,
                     help="power of sigma in the two-step lasso tuning parameter")
    run.add_argument("--timing", action="store_true", default=None,
                     help="record wall-clock milliseconds (makes trials.csv run-dependent)")
    run.add_argument("--out", type=Path, required=True)
    _add_threads(run)

    cal = sub.add_parser("calibrate", help="regenerate the golden constant files")
    cal.add_argument("--out-dir", type=Path, default=None, help="default: the package data directory")
    cal.add_argument("--pilot-reps", type=int, default=10, help="replicates per pilot setting for eta")
    cal.add_argument("--skip-pilot", action="store_true", help="keep the frozen eta values")
    cal.add_argument("--seed", type=int, default=2024)

    grid = sub.add_parser("grid", help="run the full simulation grid")
    grid.add_argument("--paper", action="store_true", required=True)
    grid.add_argument("--reps", type=int, default=100)
    grid.add_argument("--seed", type=int, default=42)
    grid.add_argument("--sparse-only", action="store_true")
    grid.add_argument("--dense-only", action="store_true")
    grid.add_argument("--timing", action="store_true")
    grid.add_argument("--out", type=Path, required=True)
    _add_threads(grid)
    return parser


def _config_from_args(args):
    from .simlab.runner import SimConfig

    d = {}
    if args.config is not None:
        try:
            d = json.loads(args.config.read_text())
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc.strerror or exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise UsageError("config file must hold a JSON object")
    for flag, (name, _) in _RUN_FLAGS.items():
        v = getattr(args, flag)
        if v is not None:
            d[name] = v
    for name in ("strict_multi", "sigma_power", "timing"):
        v = getattr(args, name)
        if v is not None:
            d[name] = v
    try:
        return SimConfig.from_dict(d)
    except (DomainError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from exc


def _emit(out, configs, threads):
    from .simlab import output, runner

    result = runner.run_grid(configs, threads)
    summaries = runner.aggregate(result.records, result.errors)
    paths = output.emit_outputs(result.records, summaries, out, result.errors, configs)
    for s in summaries:
        log.info("setting %d %-12s coverage %.3f  r_bar %.4f  k %.2f  (%d trials, %d errors)",
                 s.setting_id, s.method, s.coverage, s.mean_r_bar, s.mean_k, s.n_trials, s.n_errors)
    if result.errors:
        print(f"{len(result.errors)} trial(s) failed; see {paths['errors.csv']}", file=sys.stderr)
    print(paths["trials.csv"])


def cmd_run(args):
    cfg = _config_from_args(args)
    _emit(args.out, [cfg], args.threads)


def cmd_grid(args):
    from .simlab import grid

    if args.sparse_only and args.dense_only:
        raise UsageError("--sparse-only and --dense-only are exclusive")
    extra = {"timing": True} if args.timing else {}
    configs = []
    if not args.dense_only:
        configs += grid.sparse_grid(args.reps, args.seed, **extra)
    if not args.sparse_only:
        configs += grid.dense_grid(args.reps, args.seed, **extra)
    _emit(args.out, configs, args.threads)


def cmd_calibrate(args):
    from .simlab import golden

    out_dir = args.out_dir or golden.package_data_dir()
    written = golden.regenerate(out_dir, pilot_reps=args.pilot_reps, skip_pilot=args.skip_pilot,
                                seed=args.seed)
    for p in written:
        print(p)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(message)s")
        if args.command is None:
            raise UsageError("a command is required: run, calibrate or grid")
        if getattr(args, "threads", None) is not None and args.threads < 1:
            raise UsageError("--threads must be positive")
        {"run": cmd_run, "grid": cmd_grid, "calibrate": cmd_calibrate}[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (HonestSetsError, OSError, RuntimeError, ValueError) as exc:
        print(f"honestsets: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
