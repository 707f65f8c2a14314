"""Risk metric and threshold controllers.

The scheduler scores every job with a single number x, the fraction of the
job's remaining effective runtime that no longer fits before its deadline:

    x = (remaining_effective - time_to_deadline) / remaining_effective

x <= 0 means the job is on track (it would finish at or before the deadline
at its current speed); x in (0, 1) means it is behind by that fraction; x >= 1
means the deadline has already passed.  A job is admitted (or allowed to keep
running) while x is strictly below the active threshold.

Three controllers manage the threshold:

- fixed:       the threshold never moves.
- adaptive:    after every recorded outcome the threshold steps by a fixed
               quantum delta_x, upward when the measured failure rate over
               the recent window exceeds the target, downward when it is
               below.  Failures here are dominated by kills and rejections,
               so a rising failure rate reads as the controller itself being
               too strict, and the response is to open the gate.
- statistical: the threshold is re-fit to the empirical admission-risk
               distribution: the largest admission x whose cohort (all
               outcomes admitted at that risk or lower) still meets the
               target success fraction.

All controllers clamp the threshold to [x_min, x_max]; the clamp is a
stability guard, not an optimization target.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

from .errors import ConfigError


class ControllerKind(str, enum.Enum):
    FIXED = "fixed"
    ADAPTIVE = "adaptive"
    STATISTICAL = "statistical"


class Verdict(enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    CONTINUE = "continue"
    KILL = "kill"


@dataclass(frozen=True)
class Decision:
    verdict: Verdict
    x_value: float
    x_thresh: float


def x_factor(remaining_effective: float, time_to_deadline: float) -> float:
    """Deadline-risk score; see module docstring.  remaining_effective must be
    positive (a finished job has no risk to score)."""
    if remaining_effective <= 0:
        raise ValueError("x_factor requires remaining_effective > 0")
    return (remaining_effective - time_to_deadline) / remaining_effective


@dataclass
class ThresholdController:
    kind: ControllerKind = ControllerKind.FIXED
    x_thresh: float = 0.9
    x_min: float = 0.1
    x_max: float = 0.9
    delta_x: float = 0.02
    failure_target: float = 0.33
    window_size: int = 50
    # Apply the raise-only magnitude step |target - measured| * delta_x
    # instead of the signed quantized step.  Kept for comparison runs; the
    # signed step is the default because only it can lower the threshold.
    eq2_literal: bool = False
    outcome_window: deque = field(default_factory=deque, repr=False)

    def __post_init__(self) -> None:
        if not (0.0 <= self.x_min < self.x_max):
            raise ConfigError("controller: need 0 <= x_min < x_max")
        if not (self.x_min <= self.x_thresh <= self.x_max):
            raise ConfigError("controller.x_thresh must start inside [x_min, x_max]")
        if self.delta_x <= 0:
            raise ConfigError("controller.delta_x must be positive")
        if not (0.0 < self.failure_target < 1.0):
            raise ConfigError("controller.failure_target must lie in (0, 1)")
        if self.window_size < 1:
            raise ConfigError("controller.window_size must be >= 1")
        self.outcome_window = deque(self.outcome_window, maxlen=self.window_size)

    # -- decisions ---------------------------------------------------------

    def decide(self, x: float, running: bool = False) -> Decision:
        """Admission test (running=False) or keep-running test (running=True)."""
        if x < self.x_thresh:
            verdict = Verdict.CONTINUE if running else Verdict.ACCEPT
        else:
            verdict = Verdict.KILL if running else Verdict.REJECT
        return Decision(verdict, x, self.x_thresh)

    # -- feedback ----------------------------------------------------------

    def record_outcome(self, admission_x: float, succeeded: bool) -> None:
        """Record the final fate of an admitted job (oldest entry evicted
        once the window is full)."""
        self.outcome_window.append((admission_x, succeeded))

    def measured_failure_rate(self) -> float:
        if not self.outcome_window:
            return 0.0
        failures = sum(1 for _, ok in self.outcome_window if not ok)
        return failures / len(self.outcome_window)

    def update(self) -> None:
        """Run one controller update; no-op for the fixed controller."""
        if self.kind is ControllerKind.ADAPTIVE:
            self.update_adaptive()
        elif self.kind is ControllerKind.STATISTICAL:
            self.update_statistical()

    def update_adaptive(self) -> None:
        measured = self.measured_failure_rate()
        diff = measured - self.failure_target
        if self.eq2_literal:
            step = self.delta_x * abs(diff)
        elif diff > 0:
            step = self.delta_x
        elif diff < 0:
            step = -self.delta_x
        else:
            step = 0.0
        self.x_thresh = self._clamp(self.x_thresh + step)

    def update_statistical(self) -> None:
        """Re-fit the threshold to the outcome window.

        Candidates are the admission-x values present in the window, scanned
        from the largest down.  For a candidate q, the cohort is every
        recorded outcome with admission_x <= q; q is chosen as the largest
        candidate whose cohort success fraction is at least
        (1 - failure_target).  With no qualifying candidate the threshold
        drops to x_min: the recent evidence supports no admission risk level.
        """
        if not self.outcome_window:
            return
        entries = sorted(self.outcome_window, key=lambda e: e[0])
        successes = 0
        prefix = []  # successes among entries[:i+1]
        for _, ok in entries:
            successes += ok
            prefix.append(successes)
        chosen = None
        for i in range(len(entries) - 1, -1, -1):
            # skip duplicates of the same candidate value: the cohort of a
            # value is defined by its last occurrence in sort order
            if i + 1 < len(entries) and entries[i + 1][0] == entries[i][0]:
                continue
            if prefix[i] / (i + 1) >= 1.0 - self.failure_target:
                chosen = entries[i][0]
                break
        self.x_thresh = self._clamp(chosen if chosen is not None else self.x_min)

    def _clamp(self, value: float) -> float:
        return min(self.x_max, max(self.x_min, value))
