"""Discrete-event node simulator.

One node with hard CPU and memory capacities executes a queue of deadline-
constrained jobs inside VMs.  Time advances in fixed scheduler ticks; within
each tick the engine, in order:

1. advances every running job using the overhead multiplier frozen at the
   start of the tick,
2. finalizes completions (exact completion instant interpolated inside the
   tick) and deadline overruns (a running job whose deadline passes is cut
   at the deadline and counted as missed),
3. applies the keep-running test, killing any running job whose risk score
   reached the active threshold,
4. admits arrived, queued jobs in strict arrival order while they fit, each
   one subject to the admission test with the multiplier it would see if
   admitted now,
5. feeds the tick's terminal outcomes to the threshold controller and lets
   it update.

Runs are pure functions of their configuration: identical configs produce
identical reports, byte for byte.
"""

from __future__ import annotations

import itertools
from array import array
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import ConfigError
from .metrics import RunReport, summarize
from .overhead import OverheadModel, advance_progress, overhead_multiplier
from .policy import ControllerKind, ThresholdController, Verdict, x_factor
from .workload import JobSpec, WorkloadSpec, generate_workload

_TIME_EPS = 1e-9


class JobStatus(Enum):
    QUEUED = "queued"
    RUNNING = "running"
    COMPLETED = "completed"   # finished at or before its deadline
    MISSED = "missed"         # deadline passed while the job was running
    KILLED = "killed"         # cut by the keep-running test before its deadline
    REJECTED = "rejected"     # turned away at admission (terminal, not re-queued)


TERMINAL_STATUSES = frozenset(
    {JobStatus.COMPLETED, JobStatus.MISSED, JobStatus.KILLED, JobStatus.REJECTED})


@dataclass
class JobState:
    spec: JobSpec
    work_remaining: float
    status: JobStatus = JobStatus.QUEUED
    admitted_at: float | None = None
    admission_x: float | None = None
    finished_at: float | None = None


@dataclass
class NodeState:
    cpu_capacity: float = 4.0
    mem_capacity: float = 8.0
    running: list[JobState] = field(default_factory=list)

    def cpu_used(self) -> float:
        return sum(js.spec.cpu_demand for js in self.running)

    def mem_used(self) -> float:
        return sum(js.spec.mem_demand for js in self.running)

    def fits(self, job: JobSpec) -> bool:
        return (self.cpu_used() + job.cpu_demand <= self.cpu_capacity + _TIME_EPS
                and self.mem_used() + job.mem_demand <= self.mem_capacity + _TIME_EPS)


@dataclass
class ControllerSettings:
    """Controller parameters as configured; a fresh live controller is built
    from these at the start of every run."""

    kind: ControllerKind = ControllerKind.FIXED
    x_start: float = 0.9
    x_min: float = 0.1
    x_max: float = 0.9
    delta_x: float = 0.02
    failure_target: float = 0.33
    window_size: int = 50
    eq2_literal: bool = False

    def build(self) -> ThresholdController:
        return ThresholdController(
            kind=self.kind, x_thresh=self.x_start, x_min=self.x_min,
            x_max=self.x_max, delta_x=self.delta_x,
            failure_target=self.failure_target, window_size=self.window_size,
            eq2_literal=self.eq2_literal)


@dataclass
class SimConfig:
    workload: WorkloadSpec = field(default_factory=WorkloadSpec)
    overhead: OverheadModel = field(default_factory=OverheadModel)
    controller: ControllerSettings = field(default_factory=ControllerSettings)
    preset: str = "custom"
    seed: int = 1
    node_cpu: float = 4.0
    node_mem_gb: float = 8.0
    scheduler_period: float = 0.1
    kill_running: bool = True
    requeue_rejected: bool = False

    def validate(self) -> None:
        self.workload.validate()
        self.overhead.validate()
        self.controller.build()  # raises ConfigError on bad parameters
        if self.node_cpu <= 0 or self.node_mem_gb <= 0:
            raise ConfigError("node capacities must be positive")
        if self.scheduler_period <= 0:
            raise ConfigError("engine.scheduler_period must be positive")


def effective_remaining(job: JobState, model: OverheadModel, co_residents: int) -> float:
    """Wall hours the job still needs at its current multiplier."""
    return job.work_remaining * overhead_multiplier(
        model, job.spec.workload_class, co_residents)


def run(config: SimConfig, jobs: list[JobSpec] | None = None) -> RunReport:
    """Simulate the configured workload to completion and summarize it.

    Passing `jobs` replays that explicit queue instead of generating one
    from config.workload.
    """
    config.validate()
    if jobs is None:
        jobs = generate_workload(config.workload)
    else:
        jobs = sorted(jobs, key=lambda j: j.arrival_time)
        for job in jobs:
            job.validate()
    if not jobs:
        raise ConfigError(
            "workload produced no jobs; total_hours is below one minimum-"
            "length job")
    for job in jobs:
        if job.cpu_demand > config.node_cpu or job.mem_demand > config.node_mem_gb:
            raise ConfigError(
                f"job {job.job_id} demands ({job.cpu_demand:.2f} cpu, "
                f"{job.mem_demand:.2f} GB) exceed node capacity")

    states = [JobState(spec=j, work_remaining=j.base_duration) for j in jobs]
    queue = deque(states)
    node = NodeState(cpu_capacity=config.node_cpu, mem_capacity=config.node_mem_gb)
    ctrl = config.controller.build()
    model = config.overhead
    period = config.scheduler_period
    kill_running = config.kill_running
    requeue = config.requeue_rejected

    series_t = array("d")
    series_x = array("d")
    series_f = array("d")
    busy_cpu_hours = 0.0
    terminal = 0
    total = len(states)
    t_prev = 0.0
    tick_index = 0

    while terminal < total:
        tick_index += 1
        now = tick_index * period
        dt = now - t_prev
        outcomes: list[tuple[float, bool]] = []

        # 1+2: advance running jobs at the multiplier frozen at tick start,
        # then finalize completions and deadline overruns.
        if node.running:
            co = len(node.running) - 1
            survivors: list[JobState] = []
            for js in node.running:
                mult = overhead_multiplier(model, js.spec.workload_class, co)
                wall_needed = js.work_remaining * mult
                deadline = js.spec.deadline
                if wall_needed <= dt + _TIME_EPS and t_prev + wall_needed <= deadline + _TIME_EPS:
                    t_comp = t_prev + wall_needed
                    js.work_remaining = 0.0
                    js.status = JobStatus.COMPLETED
                    js.finished_at = t_comp
                    outcomes.append((js.admission_x, True))
                    busy_cpu_hours += js.spec.cpu_demand * (t_comp - t_prev)
                    terminal += 1
                elif now >= deadline - _TIME_EPS:
                    # cut at the deadline: the platform reclaims the VM the
                    # moment the job overruns its allocation
                    js.work_remaining = advance_progress(
                        js.work_remaining, max(0.0, deadline - t_prev), mult)
                    js.status = JobStatus.MISSED
                    js.finished_at = deadline
                    outcomes.append((js.admission_x, False))
                    busy_cpu_hours += js.spec.cpu_demand * max(0.0, deadline - t_prev)
                    terminal += 1
                else:
                    js.work_remaining = advance_progress(js.work_remaining, dt, mult)
                    busy_cpu_hours += js.spec.cpu_demand * dt
                    survivors.append(js)
            node.running = survivors

        # 3: keep-running test (evaluated simultaneously over the survivors)
        if kill_running and node.running:
            co = len(node.running) - 1
            keep: list[JobState] = []
            for js in node.running:
                x = x_factor(effective_remaining(js, model, co), js.spec.deadline - now)
                if ctrl.decide(x, running=True).verdict is Verdict.KILL:
                    js.status = JobStatus.KILLED
                    js.finished_at = now
                    outcomes.append((js.admission_x, False))
                    terminal += 1
                else:
                    keep.append(js)
            node.running = keep

        # 4: FIFO admission of arrived jobs while they fit
        deferred: list[JobState] = []
        while queue and queue[0].spec.arrival_time <= now + _TIME_EPS:
            js = queue[0]
            if not node.fits(js.spec):
                break
            queue.popleft()
            mult = overhead_multiplier(
                model, js.spec.workload_class, len(node.running))
            x = x_factor(js.work_remaining * mult, js.spec.deadline - now)
            if ctrl.decide(x, running=False).verdict is Verdict.ACCEPT:
                js.status = JobStatus.RUNNING
                js.admitted_at = now
                js.admission_x = x
                node.running.append(js)
            elif requeue:
                if now >= js.spec.deadline - _TIME_EPS:
                    # the deadline passed while the job sat in the queue; a
                    # further retry could never admit it (x only rises while
                    # work is untouched), so finalize it as a miss
                    js.status = JobStatus.MISSED
                    js.finished_at = now
                    terminal += 1
                else:
                    deferred.append(js)  # retried next tick, not blocking others
            else:
                js.status = JobStatus.REJECTED
                js.finished_at = now
                terminal += 1
        for js in reversed(deferred):
            queue.appendleft(js)

        assert node.cpu_used() <= config.node_cpu + 1e-6, "cpu capacity violated"
        assert node.mem_used() <= config.node_mem_gb + 1e-6, "memory capacity violated"

        # 5: controller feedback, one update per recorded outcome
        for admission_x, succeeded in outcomes:
            ctrl.record_outcome(admission_x if admission_x is not None else 0.0,
                                succeeded)
            ctrl.update()

        series_t.append(now)
        series_x.append(ctrl.x_thresh)
        series_f.append(ctrl.measured_failure_rate())
        t_prev = now

    assert terminal == total
    return summarize(
        preset=config.preset, seed=config.seed, states=states,
        series_t=series_t, series_x=series_x, series_f=series_f,
        busy_cpu_hours=busy_cpu_hours, cpu_capacity=config.node_cpu,
        makespan=t_prev)


# -- parameter sweeps --------------------------------------------------------

SWEEPABLE_PARAMS = (
    "overhead_scale", "contention_coeff", "x_fixed", "x_start", "delta_x",
    "failure_target", "window_size", "scheduler_period",
)


def apply_params(config: SimConfig, params: dict) -> SimConfig:
    """A copy of `config` with sweep parameters applied.

    overhead_scale rescales how far each base multiplier sits above 1.0,
    preserving the relative penalty ordering of the classes.
    """
    cfg = replace(config)
    for name, value in params.items():
        if name == "overhead_scale":
            scaled = {cls: 1.0 + value * (mult - 1.0)
                      for cls, mult in config.overhead.base_multiplier.items()}
            cfg.overhead = replace(config.overhead, base_multiplier=scaled)
        elif name == "contention_coeff":
            cfg.overhead = replace(cfg.overhead, contention_coeff=value)
        elif name in ("x_fixed", "x_start"):
            cfg.controller = replace(cfg.controller, x_start=value)
        elif name == "delta_x":
            cfg.controller = replace(cfg.controller, delta_x=value)
        elif name == "failure_target":
            cfg.controller = replace(cfg.controller, failure_target=value)
        elif name == "window_size":
            cfg.controller = replace(cfg.controller, window_size=int(value))
        elif name == "scheduler_period":
            cfg.scheduler_period = value
        else:
            raise ConfigError(f"unknown sweep parameter: {name}")
    return cfg


def train(base_config: SimConfig, sweep_grid: dict[str, list]) -> tuple[dict, RunReport]:
    """Grid-search the sweep parameters on the base configuration.

    Runs every point of the cartesian product and returns the parameter set
    with the highest success rate, ties broken by lower deadline miss rate,
    then by grid order.
    """
    if not sweep_grid:
        raise ConfigError("train: sweep_grid must not be empty")
    for name, values in sweep_grid.items():
        if name not in SWEEPABLE_PARAMS:
            raise ConfigError(f"unknown sweep parameter: {name}")
        if not values:
            raise ConfigError(f"train: empty candidate list for {name}")
    names = list(sweep_grid.keys())
    best: tuple[tuple[float, float], dict, RunReport] | None = None
    for combo in itertools.product(*(sweep_grid[n] for n in names)):
        params = dict(zip(names, combo))
        report = run(apply_params(base_config, params))
        key = (-report.success_rate, report.deadline_miss_rate)
        if best is None or key < best[0]:
            best = (key, params, report)
    assert best is not None
    return best[1], best[2]
