"""Virtualization overhead model.

A job's wall-clock slowdown is expressed as a multiplier on its remaining
work: a job with H hours of work left and multiplier m needs m*H wall hours
to finish.  Three modes are supported:

- physical: bare-metal execution, multiplier 1.0 for every job.
- static:   a fixed per-class multiplier, the penalty of running inside an
            unmanaged VM; co-residency does not enter.
- dynamic:  a managed per-class multiplier scaled up by live contention,
            (1 + contention_coeff * co_residents); the scheduler re-reads it
            every tick, so admission and kill decisions see the overhead the
            job is actually experiencing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import ConfigError
from .workload import WorkloadClass


class OverheadMode(str, enum.Enum):
    PHYSICAL = "physical"
    STATIC = "static"
    DYNAMIC = "dynamic"


# Unmanaged VM penalty per class: CPU-heavy code virtualizes nearly natively,
# memory-heavy jobs pay for paging/ballooning, IO-heavy jobs pay the most.
DEFAULT_STATIC_MULTIPLIERS: dict[WorkloadClass, float] = {
    WorkloadClass.CPU_BOUND: 1.02,
    WorkloadClass.MEM_BOUND: 1.30,
    WorkloadClass.IO_BOUND: 1.60,
}

# Managed overhead: near-native while the node is quiet; the cost of
# virtualization shows up only through contention, at contention_coeff per
# co-resident job.
DEFAULT_DYNAMIC_MULTIPLIERS: dict[WorkloadClass, float] = {
    WorkloadClass.CPU_BOUND: 1.00,
    WorkloadClass.MEM_BOUND: 1.00,
    WorkloadClass.IO_BOUND: 1.00,
}

DEFAULT_CONTENTION_COEFF = 0.14


@dataclass
class OverheadModel:
    mode: OverheadMode = OverheadMode.PHYSICAL
    base_multiplier: dict[WorkloadClass, float] = field(
        default_factory=lambda: dict(DEFAULT_STATIC_MULTIPLIERS))
    contention_coeff: float = DEFAULT_CONTENTION_COEFF

    def validate(self) -> None:
        for wclass, mult in self.base_multiplier.items():
            if mult < 1.0:
                raise ConfigError(
                    f"overhead.base_multiplier.{wclass.value} must be >= 1.0")
        if self.contention_coeff < 0:
            raise ConfigError("overhead.contention_coeff must be >= 0")


def overhead_multiplier(model: OverheadModel, wclass: WorkloadClass,
                        co_residents: int) -> float:
    """Slowdown multiplier for a job of `wclass` sharing the node with
    `co_residents` other running jobs."""
    assert co_residents >= 0
    if model.mode is OverheadMode.PHYSICAL:
        return 1.0
    base = model.base_multiplier[wclass]
    if model.mode is OverheadMode.STATIC:
        return base
    return base * (1.0 + model.contention_coeff * co_residents)


def advance_progress(work_remaining: float, wall_dt: float, multiplier: float) -> float:
    """Work left after `wall_dt` wall hours at the given multiplier."""
    assert wall_dt >= 0 and multiplier >= 1.0
    return max(0.0, work_remaining - wall_dt / multiplier)
