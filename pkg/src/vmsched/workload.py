"""Synthetic workload generation.

Produces the job queue fed to the simulation engine: a sequence of batch jobs
with known durations, per-class resource demands, and a deadline assigned at
submission time as the job's duration plus a small proportional buffer.
Generation is a pure function of the spec, so two calls with equal specs
return identical queues.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .rng import stream


class WorkloadClass(str, enum.Enum):
    CPU_BOUND = "cpu_bound"
    MEM_BOUND = "mem_bound"
    IO_BOUND = "io_bound"


# (cpu_demand range in cores, mem_demand range in GB) drawn uniformly per job.
# CPU-heavy jobs dominate core usage, memory-heavy jobs dominate RAM, and
# IO-heavy jobs are light on both (their cost shows up as slowdown, not as
# resource footprint).
DEMAND_RANGES: dict[WorkloadClass, tuple[tuple[float, float], tuple[float, float]]] = {
    WorkloadClass.CPU_BOUND: ((0.9, 1.8), (0.5, 1.5)),
    WorkloadClass.MEM_BOUND: ((0.5, 1.0), (2.0, 3.6)),
    WorkloadClass.IO_BOUND: ((0.4, 0.9), (0.8, 1.8)),
}

DEFAULT_CLASS_MIX: dict[WorkloadClass, float] = {
    WorkloadClass.CPU_BOUND: 0.4,
    WorkloadClass.MEM_BOUND: 0.4,
    WorkloadClass.IO_BOUND: 0.2,
}

# Job length alternates between campaign seasons, mimicking shared clusters
# where stretches dominated by long batch campaigns trade off with stretches
# of short exploratory runs. Season lengths are exponential with the dwell
# below; a season draws durations from its half of duration_range, split at
# the log midpoint so the two halves are symmetric on the log scale.
PHASE_DWELL_HOURS = 300.0


@dataclass(frozen=True)
class JobSpec:
    """One batch job as submitted: demands, duration, arrival, deadline."""

    job_id: int
    workload_class: WorkloadClass
    cpu_demand: float          # cores held while running
    mem_demand: float          # GB held while running
    base_duration: float       # hours of work at physical (overhead-free) speed
    arrival_time: float        # absolute simulation hours
    deadline: float            # absolute simulation hours

    def validate(self) -> None:
        if self.cpu_demand <= 0 or self.mem_demand <= 0:
            raise ConfigError(f"job {self.job_id}: demands must be positive")
        if self.base_duration <= 0:
            raise ConfigError(f"job {self.job_id}: base_duration must be positive")
        if self.deadline <= self.arrival_time:
            raise ConfigError(f"job {self.job_id}: deadline must fall after arrival")


@dataclass
class WorkloadSpec:
    """Parameters of the synthetic queue.

    arrival_model is the mean inter-arrival gap expressed as a fraction of the
    mean job duration; gaps themselves are exponential, so the queue arrives
    Poisson-like around a controlled average. Durations swing between
    long-campaign and short-campaign seasons within duration_range.
    """

    total_hours: float = 10_000.0
    class_mix: dict[WorkloadClass, float] = field(
        default_factory=lambda: dict(DEFAULT_CLASS_MIX))
    duration_range: tuple[float, float] = (3.0, 24.0)
    deadline_slack: float = 0.05
    arrival_model: float = 3.2
    seed: int = 1

    def validate(self) -> None:
        if self.total_hours <= 0:
            raise ConfigError("workload.total_hours must be positive")
        if not self.class_mix:
            raise ConfigError("workload.class_mix must not be empty")
        for wclass, weight in self.class_mix.items():
            if wclass not in DEMAND_RANGES:
                raise ConfigError(f"workload.class_mix: unknown class {wclass!r}")
            if weight < 0:
                raise ConfigError(f"workload.class_mix.{wclass.value} must be >= 0")
        if sum(self.class_mix.values()) <= 0:
            raise ConfigError("workload.class_mix weights must sum to > 0")
        lo, hi = self.duration_range
        if not (0 < lo <= hi):
            raise ConfigError("workload.duration_range must satisfy 0 < min <= max")
        if self.deadline_slack < 0:
            raise ConfigError("workload.deadline_slack must be >= 0")
        if self.arrival_model <= 0:
            raise ConfigError("workload.arrival_model must be positive")

    @property
    def mean_duration(self) -> float:
        """Long-run mean job duration: seasons spend equal time on each half
        of duration_range, so this is the average of the two half-range
        log-uniform means."""
        lo, hi = self.duration_range
        if lo == hi:
            return lo
        mid = math.sqrt(lo * hi)
        mean_low = (mid - lo) / math.log(mid / lo)
        mean_high = (hi - mid) / math.log(hi / mid)
        return 0.5 * (mean_low + mean_high)


def assign_deadline(duration: float, arrival: float, slack: float) -> float:
    """Deadline for a job submitted at `arrival`: its duration plus a
    proportional buffer, measured from submission."""
    if duration <= 0:
        raise ConfigError("duration must be positive")
    if slack < 0:
        raise ConfigError("slack must be >= 0")
    return arrival + duration * (1.0 + slack)


def generate_workload(spec: WorkloadSpec) -> list[JobSpec]:
    """Generate the job queue described by `spec`, sorted by arrival time.

    Job durations are drawn log-uniformly from the active season's half of
    duration_range until their sum reaches spec.total_hours; the final draw
    is trimmed to the remaining volume when that keeps it within
    duration_range, so the generated volume tracks total_hours to well under
    one percent at any realistic horizon.
    """
    spec.validate()
    rng = stream(spec.seed, "workload")
    lo, hi = spec.duration_range
    mid = math.sqrt(lo * hi)
    # (long-campaign, short-campaign) sub-ranges; log-uniform within each
    season_ranges = ((mid, hi), (lo, mid))
    classes = list(spec.class_mix.keys())
    weights = [spec.class_mix[c] for c in classes]
    mean_gap = spec.arrival_model * spec.mean_duration

    jobs: list[JobSpec] = []
    produced = 0.0
    clock = 0.0
    season = 0
    season_end = rng.expovariate(1.0 / PHASE_DWELL_HOURS)
    while produced < spec.total_hours:
        while clock >= season_end:
            season = 1 - season
            season_end += rng.expovariate(1.0 / PHASE_DWELL_HOURS)
        dlo, dhi = season_ranges[season]
        duration = dlo if dlo == dhi else dlo * (dhi / dlo) ** rng.random()
        remaining = spec.total_hours - produced
        if duration > remaining:
            if remaining < lo:
                break  # under-run by less than one minimum-length job
            duration = remaining
        wclass = rng.choices(classes, weights=weights)[0]
        (cpu_lo, cpu_hi), (mem_lo, mem_hi) = DEMAND_RANGES[wclass]
        cpu = rng.uniform(cpu_lo, cpu_hi)
        mem = rng.uniform(mem_lo, mem_hi)
        clock += rng.expovariate(1.0 / mean_gap)
        job = JobSpec(
            job_id=len(jobs),
            workload_class=wclass,
            cpu_demand=cpu,
            mem_demand=mem,
            base_duration=duration,
            arrival_time=clock,
            deadline=assign_deadline(duration, clock, spec.deadline_slack),
        )
        job.validate()
        jobs.append(job)
        produced += duration
    return jobs


def write_queue_csv(jobs: list[JobSpec], path: str) -> None:
    """Dump a generated queue for inspection."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["job_id", "class", "cpu_demand", "mem_demand",
                         "base_duration", "arrival_time", "deadline"])
        for job in jobs:
            writer.writerow([
                job.job_id, job.workload_class.value,
                f"{job.cpu_demand:.6f}", f"{job.mem_demand:.6f}",
                f"{job.base_duration:.6f}", f"{job.arrival_time:.6f}",
                f"{job.deadline:.6f}",
            ])
