"""Command line front end: run presets, train parameters, compare, replot.

Outputs land in --out (or $VMSCHED_OUT, or the working directory) under fixed
names: summary.csv, timeseries.csv, calibration.csv, comparison.svg,
evolution_<preset>.svg.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from types import SimpleNamespace

from .config import (PRESET_NAMES, apply_calibration, build_sim_config,
                     default_settings, parse_config_file, read_calibration_csv,
                     write_calibration_csv)
from .engine import SWEEPABLE_PARAMS, run, train
from .errors import ConfigError
from .metrics import (emit_comparison_plot, emit_evolution_plot,
                      read_summary_csv, write_report_csv, write_series_csv)
from .overhead import OverheadMode
from .workload import WorkloadClass

# Default training grids.  Stage one anchors the overhead map on the
# unmanaged-VM preset; stage two tunes the adaptive controller on top of the
# calibrated overheads.  The mild scale comes first so ties resolve to it.
OVERHEAD_SCALE_GRID = [1.0, 0.85, 1.15, 1.3]
CONTROLLER_GRID = {
    "delta_x": [0.02, 0.05, 0.08],
    # Targets above ~1/3 make the controller tolerate worse-than-baseline
    # failure rates, so the candidate list stops there.
    "failure_target": [0.20, 0.25, 0.30, 0.33],
}

# Sweep parameter -> concrete configuration key (overhead_scale is special:
# it expands to the per-class multiplier keys of the map the preset uses).
_PARAM_KEYS = {
    "contention_coeff": "overhead.contention_coeff",
    "x_fixed": "controller.x_fixed",
    "x_start": "controller.x_start",
    "delta_x": "controller.delta_x",
    "failure_target": "controller.failure_target",
    "window_size": "controller.window_size",
    "scheduler_period": "engine.scheduler_period",
}


def _out_dir(arg: str | None) -> str:
    out = arg or os.environ.get("VMSCHED_OUT") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _settings_for(args) -> dict:
    settings = (parse_config_file(args.config) if args.config
                else default_settings())
    calibration = getattr(args, "calibration", None)
    if calibration:
        settings = apply_calibration(settings, read_calibration_csv(calibration))
    return settings


def _parse_seeds(text: str) -> list[int]:
    try:
        seeds = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse seed list {text!r}") from None
    if not seeds:
        raise ConfigError("seed list is empty")
    return seeds


def _parse_grid_file(path: str) -> tuple[str, dict[str, list[float]]]:
    """Grid files are flat `name = v1, v2, ...` lines plus an optional
    `preset = alg_N` line naming the configuration to tune (default alg_4)."""
    preset = "alg_4"
    grid: dict[str, list[float]] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected 'name = values'")
            name, raw = text.split("=", 1)
            name = name.strip()
            if name == "preset":
                preset = raw.strip()
                continue
            if name not in SWEEPABLE_PARAMS:
                raise ConfigError(
                    f"{path}:{lineno}: unknown sweep parameter {name!r}; "
                    f"valid: {', '.join(SWEEPABLE_PARAMS)}")
            try:
                values = [float(v) for v in raw.split(",") if v.strip()]
            except ValueError:
                raise ConfigError(
                    f"{path}:{lineno}: cannot parse values {raw.strip()!r}"
                ) from None
            if not values:
                raise ConfigError(f"{path}:{lineno}: empty candidate list for {name}")
            grid[name] = values
    if not grid:
        raise ConfigError(f"{path}: grid file lists no sweep parameters")
    return preset, grid


def _materialize(settings: dict, preset: str, params: dict) -> dict[str, object]:
    """Translate winning sweep parameters into concrete configuration keys so
    the calibration file can be applied to any later run."""
    calib: dict[str, object] = {}
    for name, value in params.items():
        if name == "overhead_scale":
            mode = build_sim_config(settings, preset).overhead.mode
            prefix = ("overhead.dynamic" if mode is OverheadMode.DYNAMIC
                      else "overhead.static")
            for wc in WorkloadClass:
                key = f"{prefix}.{wc.value}"
                base = float(settings[key])
                calib[key] = 1.0 + value * (base - 1.0)
        elif name == "window_size":
            calib[_PARAM_KEYS[name]] = int(value)
        else:
            calib[_PARAM_KEYS[name]] = value
    return calib


def _fmt_params(params: dict) -> str:
    return ", ".join(f"{k}={v:g}" for k, v in params.items())


# -- subcommands --------------------------------------------------------------

def _cmd_run(args) -> int:
    settings = _settings_for(args)
    config = build_sim_config(settings, args.preset, seed=args.seed,
                              hours=args.hours)
    report = run(config)
    out = _out_dir(args.out)
    write_report_csv(report, os.path.join(out, "summary.csv"))
    write_series_csv(report, os.path.join(out, "timeseries.csv"))
    emit_evolution_plot(report, os.path.join(out, f"evolution_{args.preset}.svg"))
    print(f"{args.preset} seed {config.seed}: success {report.success_rate:.4f} "
          f"miss {report.deadline_miss_rate:.4f} "
          f"({report.completed}/{report.jobs_total} jobs completed)")
    return 0


def _cmd_train(args) -> int:
    settings = _settings_for(args)
    hours = args.hours if args.hours is not None else float(settings["train.hours"])
    out = _out_dir(args.out)
    if args.grid:
        preset, grid = _parse_grid_file(args.grid)
        base = build_sim_config(settings, preset, hours=hours)
        best, report = train(base, grid)
        calib = _materialize(settings, preset, best)
        print(f"{preset} grid search: {_fmt_params(best)} "
              f"-> success {report.success_rate:.4f}")
    else:
        calib = {}
        base = build_sim_config(settings, "alg_2", hours=hours)
        best, report = train(base, {"overhead_scale": OVERHEAD_SCALE_GRID})
        calib.update(_materialize(settings, "alg_2", best))
        print(f"alg_2 overhead calibration: scale {best['overhead_scale']:g} "
              f"-> success {report.success_rate:.4f}")
        settings = apply_calibration(settings, calib)
        base = build_sim_config(settings, "alg_4", hours=hours)
        best, report = train(base, CONTROLLER_GRID)
        calib.update(_materialize(settings, "alg_4", best))
        print(f"alg_4 controller tuning: {_fmt_params(best)} "
              f"-> success {report.success_rate:.4f}")
    path = os.path.join(out, "calibration.csv")
    write_calibration_csv(calib, path)
    print(f"wrote {path}")
    return 0


def _run_one(settings: dict, preset: str, seed: int, hours: float | None):
    return run(build_sim_config(settings, preset, seed=seed, hours=hours))


def _cmd_compare(args) -> int:
    settings = _settings_for(args)
    seeds = _parse_seeds(args.seeds)
    tasks = [(preset, seed) for preset in PRESET_NAMES for seed in seeds]
    jobs = args.jobs if args.jobs else (os.cpu_count() or 1)
    jobs = max(1, min(jobs, len(tasks)))
    if jobs > 1:
        # Fan out across processes; result order stays preset-major then
        # seed order no matter which worker finishes first.
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_one, settings, p, s, args.hours)
                       for p, s in tasks]
            reports = [f.result() for f in futures]
    else:
        reports = [_run_one(settings, p, s, args.hours) for p, s in tasks]
    out = _out_dir(args.out)
    write_report_csv(reports, os.path.join(out, "summary.csv"))
    emit_comparison_plot(reports, os.path.join(out, "comparison.svg"))
    for preset in ("alg_4", "alg_5"):
        first = next(r for r in reports if r.preset == preset)
        emit_evolution_plot(first, os.path.join(out, f"evolution_{preset}.svg"))
    for preset in PRESET_NAMES:
        rows = [r for r in reports if r.preset == preset]
        mean_s = sum(r.success_rate for r in rows) / len(rows)
        mean_m = sum(r.deadline_miss_rate for r in rows) / len(rows)
        print(f"{preset}: mean success {mean_s:.4f} mean miss {mean_m:.4f} "
              f"({len(rows)} seeds)")
    return 0


def _cmd_plot(args) -> int:
    path = os.path.join(args.in_dir, "summary.csv")
    rows = read_summary_csv(path)
    if not rows:
        raise ConfigError(f"{path} has no runs to plot")
    reports = [SimpleNamespace(**row) for row in rows]
    out = _out_dir(args.out)
    target = os.path.join(out, "comparison.svg")
    emit_comparison_plot(reports, target)
    print(f"wrote {target}")
    return 0


# -- argument parsing ----------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vmsched",
        description="Deadline-constrained job scheduling on one contended node.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one preset and write its report")
    p_run.add_argument("--preset", required=True,
                       help=f"one of: {', '.join(PRESET_NAMES)}")
    p_run.add_argument("--config", help="flat key = value configuration file")
    p_run.add_argument("--seed", type=int, help="workload seed override")
    p_run.add_argument("--hours", type=float, help="workload hours override")
    p_run.add_argument("--calibration",
                       help="calibration.csv from an earlier train")
    p_run.add_argument("--out", help="output directory ($VMSCHED_OUT or .)")
    p_run.set_defaults(func=_cmd_run)

    p_train = sub.add_parser("train", help="grid-search parameters and write "
                                           "calibration.csv")
    p_train.add_argument("--config", help="flat key = value configuration file")
    p_train.add_argument("--grid", help="sweep grid file; omit for the "
                                        "default two-stage calibration")
    p_train.add_argument("--hours", type=float,
                         help="training workload hours (default train.hours)")
    p_train.add_argument("--out", help="output directory ($VMSCHED_OUT or .)")
    p_train.set_defaults(func=_cmd_train)

    p_cmp = sub.add_parser("compare", help="run all five presets across seeds")
    p_cmp.add_argument("--config", help="flat key = value configuration file")
    p_cmp.add_argument("--seeds", default="1,2,3,4,5",
                       help="comma-separated seed list (default 1,2,3,4,5)")
    p_cmp.add_argument("--hours", type=float, help="workload hours override")
    p_cmp.add_argument("--calibration",
                       help="calibration.csv from an earlier train")
    p_cmp.add_argument("--jobs", type=int,
                       help="worker processes (default: cpu count)")
    p_cmp.add_argument("--out", help="output directory ($VMSCHED_OUT or .)")
    p_cmp.set_defaults(func=_cmd_compare)

    p_plot = sub.add_parser("plot", help="re-render comparison.svg from a "
                                         "summary.csv")
    p_plot.add_argument("--in", dest="in_dir", required=True,
                        help="directory holding summary.csv")
    p_plot.add_argument("--out", help="output directory ($VMSCHED_OUT or .)")
    p_plot.set_defaults(func=_cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
