"""Run configuration: defaults, flat config-file parsing, presets.

Configuration files are flat `key = value` text; keys use dotted section
prefixes (for example `controller.delta_x = 0.01`), `#` starts a comment, and
every key has a default, so an empty file is a valid configuration.

Presets name the five comparison configurations:

  alg_1  bare-metal node, permissive fixed threshold
  alg_2  unmanaged VMs (static overhead), permissive fixed threshold
  alg_3  managed VMs (dynamic overhead), fixed threshold at the trained value
  alg_4  managed VMs, adaptive threshold controller
  alg_5  managed VMs, statistical threshold controller
"""

from __future__ import annotations

from dataclasses import replace

from .engine import ControllerSettings, SimConfig
from .errors import ConfigError
from .overhead import (DEFAULT_CONTENTION_COEFF, DEFAULT_DYNAMIC_MULTIPLIERS,
                       DEFAULT_STATIC_MULTIPLIERS, OverheadMode, OverheadModel)
from .policy import ControllerKind
from .workload import WorkloadClass, WorkloadSpec

DEFAULTS: dict[str, object] = {
    "workload.total_hours": 100_000.0,
    "workload.class_mix.cpu_bound": 0.4,
    "workload.class_mix.mem_bound": 0.4,
    "workload.class_mix.io_bound": 0.2,
    "workload.duration_min": 3.0,
    "workload.duration_max": 24.0,
    "workload.deadline_slack": 0.05,
    "workload.arrival_model": 3.2,
    "workload.seed": 1,
    "node.cpu_capacity": 4.0,
    "node.mem_capacity_gb": 8.0,
    "overhead.static.cpu_bound": DEFAULT_STATIC_MULTIPLIERS[WorkloadClass.CPU_BOUND],
    "overhead.static.mem_bound": DEFAULT_STATIC_MULTIPLIERS[WorkloadClass.MEM_BOUND],
    "overhead.static.io_bound": DEFAULT_STATIC_MULTIPLIERS[WorkloadClass.IO_BOUND],
    "overhead.dynamic.cpu_bound": DEFAULT_DYNAMIC_MULTIPLIERS[WorkloadClass.CPU_BOUND],
    "overhead.dynamic.mem_bound": DEFAULT_DYNAMIC_MULTIPLIERS[WorkloadClass.MEM_BOUND],
    "overhead.dynamic.io_bound": DEFAULT_DYNAMIC_MULTIPLIERS[WorkloadClass.IO_BOUND],
    "overhead.contention_coeff": DEFAULT_CONTENTION_COEFF,
    "controller.x_min": 0.1,
    "controller.x_max": 0.9,
    "controller.x_fixed": 0.2,   # alg_3 threshold, midpoint of the stable range
    "controller.x_start": 0.5,   # initial threshold for the adapting controllers
    "controller.delta_x": 0.02,
    "controller.failure_target": 0.33,
    "controller.window_size": 50,
    "controller.eq2_literal": False,
    "engine.scheduler_period": 0.1,
    "engine.kill_running": True,
    "engine.requeue_rejected": False,
    "train.hours": 10_000.0,
}

PRESET_NAMES = ("alg_1", "alg_2", "alg_3", "alg_4", "alg_5")

_PRESET_TABLE: dict[str, tuple[OverheadMode, ControllerKind, str]] = {
    "alg_1": (OverheadMode.PHYSICAL, ControllerKind.FIXED, "controller.x_max"),
    "alg_2": (OverheadMode.STATIC, ControllerKind.FIXED, "controller.x_max"),
    "alg_3": (OverheadMode.DYNAMIC, ControllerKind.FIXED, "controller.x_fixed"),
    "alg_4": (OverheadMode.DYNAMIC, ControllerKind.ADAPTIVE, "controller.x_start"),
    "alg_5": (OverheadMode.DYNAMIC, ControllerKind.STATISTICAL, "controller.x_start"),
}

_TRUE_WORDS = {"true", "yes", "on", "1"}
_FALSE_WORDS = {"false", "no", "off", "0"}


def _coerce(key: str, raw: str) -> object:
    default = DEFAULTS[key]
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            lowered = raw.lower()
            if lowered in _TRUE_WORDS:
                return True
            if lowered in _FALSE_WORDS:
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"config key {key}: cannot parse value {raw!r}") from None


def parse_config_file(path: str) -> dict[str, object]:
    """Parse a flat key = value file into typed settings (defaults merged in)."""
    settings = dict(DEFAULTS)
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = text.split("=", 1)
            key = key.strip()
            if key not in DEFAULTS:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            settings[key] = _coerce(key, raw)
    return settings


def default_settings() -> dict[str, object]:
    return dict(DEFAULTS)


def _class_map(settings: dict, prefix: str) -> dict[WorkloadClass, float]:
    return {wc: float(settings[f"{prefix}.{wc.value}"]) for wc in WorkloadClass}


def build_sim_config(settings: dict, preset: str, seed: int | None = None,
                     hours: float | None = None) -> SimConfig:
    """Assemble the SimConfig for one preset run."""
    if preset not in _PRESET_TABLE:
        raise ConfigError(
            f"unknown preset {preset!r}; valid presets: {', '.join(PRESET_NAMES)}")
    mode, kind, start_key = _PRESET_TABLE[preset]
    run_seed = int(settings["workload.seed"]) if seed is None else int(seed)
    workload = WorkloadSpec(
        total_hours=float(hours if hours is not None
                          else settings["workload.total_hours"]),
        class_mix=_class_map(settings, "workload.class_mix"),
        duration_range=(float(settings["workload.duration_min"]),
                        float(settings["workload.duration_max"])),
        deadline_slack=float(settings["workload.deadline_slack"]),
        arrival_model=float(settings["workload.arrival_model"]),
        seed=run_seed)
    if mode is OverheadMode.DYNAMIC:
        base = _class_map(settings, "overhead.dynamic")
    else:
        base = _class_map(settings, "overhead.static")
    overhead = OverheadModel(
        mode=mode, base_multiplier=base,
        contention_coeff=float(settings["overhead.contention_coeff"]))
    controller = ControllerSettings(
        kind=kind,
        x_start=float(settings[start_key]),
        x_min=float(settings["controller.x_min"]),
        x_max=float(settings["controller.x_max"]),
        delta_x=float(settings["controller.delta_x"]),
        failure_target=float(settings["controller.failure_target"]),
        window_size=int(settings["controller.window_size"]),
        eq2_literal=bool(settings["controller.eq2_literal"]))
    return SimConfig(
        workload=workload, overhead=overhead, controller=controller,
        preset=preset, seed=run_seed,
        node_cpu=float(settings["node.cpu_capacity"]),
        node_mem_gb=float(settings["node.mem_capacity_gb"]),
        scheduler_period=float(settings["engine.scheduler_period"]),
        kill_running=bool(settings["engine.kill_running"]),
        requeue_rejected=bool(settings["engine.requeue_rejected"]))


# -- calibration files --------------------------------------------------------

CALIBRATION_HEADER = "parameter,value"


def write_calibration_csv(params: dict[str, object], path: str) -> None:
    lines = [CALIBRATION_HEADER]
    for key, value in params.items():
        if isinstance(value, float):
            lines.append(f"{key},{value:.6f}")
        else:
            lines.append(f"{key},{value}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_calibration_csv(path: str) -> dict[str, object]:
    params: dict[str, object] = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CALIBRATION_HEADER:
            raise ConfigError(f"unexpected calibration header: {header!r}")
        for line in fh:
            text = line.strip()
            if not text:
                continue
            key, raw = text.split(",", 1)
            if key not in DEFAULTS:
                raise ConfigError(f"calibration file names unknown key {key!r}")
            params[key] = _coerce(key, raw)
    return params


def apply_calibration(settings: dict, params: dict[str, object]) -> dict:
    merged = dict(settings)
    for key, value in params.items():
        if key not in DEFAULTS:
            raise ConfigError(f"calibration names unknown key {key!r}")
        merged[key] = value
    return merged
