"""Deadline-aware admission control simulator for virtualized HPC jobs.

The package models one contended node executing deadline-constrained batch
jobs inside VMs, scores every job with a deadline-risk metric, and compares
fixed, adaptive, and statistical admission thresholds across five reference
configurations (alg_1 .. alg_5).
"""

from .engine import (ControllerSettings, JobState, JobStatus, NodeState,
                     SimConfig, effective_remaining, run, train)
from .errors import ConfigError
from .metrics import RunReport, summarize
from .overhead import OverheadMode, OverheadModel, advance_progress, overhead_multiplier
from .policy import ControllerKind, Decision, ThresholdController, Verdict, x_factor
from .workload import (JobSpec, WorkloadClass, WorkloadSpec, assign_deadline,
                       generate_workload)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ControllerKind", "ControllerSettings", "Decision",
    "JobSpec", "JobState", "JobStatus", "NodeState", "OverheadMode",
    "OverheadModel", "RunReport", "SimConfig", "ThresholdController",
    "Verdict", "WorkloadClass", "WorkloadSpec", "advance_progress",
    "assign_deadline", "effective_remaining", "generate_workload",
    "overhead_multiplier", "run", "summarize", "train", "x_factor",
]
