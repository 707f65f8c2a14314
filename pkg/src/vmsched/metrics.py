"""Run reports, CSV serialization, and SVG charts.

All serialized floats use 6 decimal places so that repeated runs of the same
configuration produce byte-identical files.  Charts are plain hand-built SVG
with no external references, so they render anywhere.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass, field

SUMMARY_HEADER = ("preset,seed,success_rate,deadline_miss_rate,"
                  "completed,missed,killed,rejected,utilization")
SERIES_HEADER = "t,x_thresh,f_measured"

# one hue per preset, success drawn solid, miss dashed in the same hue
_PALETTE = ("#1f6fb4", "#d62728", "#2ca02c", "#9467bd", "#e08214",
            "#17becf", "#8c564b", "#bcbd22")


@dataclass
class RunReport:
    preset: str
    seed: int
    jobs_total: int
    completed: int
    missed: int
    killed: int
    rejected: int
    success_rate: float
    deadline_miss_rate: float
    mean_utilization: float
    makespan_hours: float
    series_t: array = field(default_factory=lambda: array("d"), repr=False)
    series_x_thresh: array = field(default_factory=lambda: array("d"), repr=False)
    series_f_measured: array = field(default_factory=lambda: array("d"), repr=False)
    # terminal status per job id, in job id order; lets callers audit
    # individual fates without re-running the simulation
    job_statuses: list = field(default_factory=list, repr=False)

    def counts(self) -> dict[str, int]:
        return {"completed": self.completed, "missed": self.missed,
                "killed": self.killed, "rejected": self.rejected}


def summarize(preset: str, seed: int, states, series_t, series_x, series_f,
              busy_cpu_hours: float, cpu_capacity: float, makespan: float) -> RunReport:
    """Fold terminal job states and tick series into a RunReport.

    success_rate counts only on-time completions; the miss rate is its exact
    complement, so the two always sum to 1.
    """
    from .engine import JobStatus, TERMINAL_STATUSES  # local import avoids a cycle

    if not states:
        raise ValueError("summarize: no jobs to report")
    counts = {status: 0 for status in JobStatus}
    for js in states:
        if js.status not in TERMINAL_STATUSES:
            raise ValueError(f"summarize: job {js.spec.job_id} is not terminal")
        counts[js.status] += 1
    total = len(states)
    success_rate = counts[JobStatus.COMPLETED] / total
    for i in range(1, len(series_t)):
        if series_t[i] <= series_t[i - 1]:
            raise ValueError("summarize: series timestamps must strictly increase")
    utilization = 0.0
    if makespan > 0:
        utilization = busy_cpu_hours / (cpu_capacity * makespan)
    return RunReport(
        preset=preset, seed=seed, jobs_total=total,
        completed=counts[JobStatus.COMPLETED], missed=counts[JobStatus.MISSED],
        killed=counts[JobStatus.KILLED], rejected=counts[JobStatus.REJECTED],
        success_rate=success_rate, deadline_miss_rate=1.0 - success_rate,
        mean_utilization=utilization, makespan_hours=makespan,
        series_t=array("d", series_t), series_x_thresh=array("d", series_x),
        series_f_measured=array("d", series_f),
        job_statuses=[(js.spec.job_id, js.status.value) for js in states])


# -- CSV ---------------------------------------------------------------------

def write_report_csv(reports, path: str) -> None:
    """summary.csv: one row per run, preset-major order preserved."""
    if isinstance(reports, RunReport):
        reports = [reports]
    lines = [SUMMARY_HEADER]
    for r in reports:
        lines.append(
            f"{r.preset},{r.seed},{r.success_rate:.6f},{r.deadline_miss_rate:.6f},"
            f"{r.completed},{r.missed},{r.killed},{r.rejected},"
            f"{r.mean_utilization:.6f}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_summary_csv(path: str) -> list[dict]:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != SUMMARY_HEADER:
            raise ValueError(f"unexpected summary header: {header!r}")
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != 9:
                raise ValueError(f"malformed summary row: {line!r}")
            rows.append({
                "preset": parts[0], "seed": int(parts[1]),
                "success_rate": float(parts[2]),
                "deadline_miss_rate": float(parts[3]),
                "completed": int(parts[4]), "missed": int(parts[5]),
                "killed": int(parts[6]), "rejected": int(parts[7]),
                "utilization": float(parts[8])})
    return rows


def write_series_csv(report: RunReport, path: str) -> None:
    """timeseries.csv: threshold and measured failure rate per tick."""
    lines = [SERIES_HEADER]
    for t, x, f in zip(report.series_t, report.series_x_thresh,
                       report.series_f_measured):
        lines.append(f"{t:.6f},{x:.6f},{f:.6f}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_series_csv(path: str) -> tuple[array, array, array]:
    ts, xs, fs = array("d"), array("d"), array("d")
    with open(path) as fh:
        header = fh.readline().strip()
        if header != SERIES_HEADER:
            raise ValueError(f"unexpected series header: {header!r}")
        for line in fh:
            t, x, f = line.strip().split(",")
            ts.append(float(t))
            xs.append(float(x))
            fs.append(float(f))
    return ts, xs, fs


# -- SVG ---------------------------------------------------------------------

class _Chart:
    """Minimal line-chart canvas: fixed margins, linear axes, polylines."""

    def __init__(self, title: str, width: int = 760, height: int = 440,
                 x_label: str = "", y_label: str = "") -> None:
        self.width, self.height = width, height
        self.left, self.right, self.top, self.bottom = 64, 180, 48, 48
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}" '
            f'font-family="Helvetica, Arial, sans-serif">',
            f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
            f'<text x="{width / 2:.1f}" y="24" font-size="15" '
            f'text-anchor="middle">{title}</text>']
        self.x_label, self.y_label = x_label, y_label
        self.x_range = (0.0, 1.0)
        self.y_range = (0.0, 1.0)
        self._legend_row = 0

    def set_ranges(self, x_range, y_range) -> None:
        span_x = x_range[1] - x_range[0]
        span_y = y_range[1] - y_range[0]
        self.x_range = (x_range[0], x_range[0] + (span_x if span_x > 0 else 1.0))
        self.y_range = (y_range[0], y_range[0] + (span_y if span_y > 0 else 1.0))

    def _px(self, x: float) -> float:
        x0, x1 = self.x_range
        frac = (x - x0) / (x1 - x0)
        return self.left + frac * (self.width - self.left - self.right)

    def _py(self, y: float) -> float:
        y0, y1 = self.y_range
        frac = (y - y0) / (y1 - y0)
        return self.height - self.bottom - frac * (self.height - self.top - self.bottom)

    def axes(self, x_ticks, y_ticks, x_fmt="{:g}", y_fmt="{:.1f}") -> None:
        x0, y0 = self.left, self.height - self.bottom
        x1, y1 = self.width - self.right, self.top
        for yt in y_ticks:
            py = self._py(yt)
            self.parts.append(
                f'<line x1="{x0}" y1="{py:.2f}" x2="{x1}" y2="{py:.2f}" '
                f'stroke="#dddddd" stroke-width="1"/>')
            self.parts.append(
                f'<text x="{x0 - 8}" y="{py + 4:.2f}" font-size="11" '
                f'text-anchor="end">{y_fmt.format(yt)}</text>')
        for xt in x_ticks:
            px = self._px(xt)
            self.parts.append(
                f'<text x="{px:.2f}" y="{y0 + 18}" font-size="11" '
                f'text-anchor="middle">{x_fmt.format(xt)}</text>')
        self.parts.append(
            f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="#333333"/>')
        self.parts.append(
            f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="#333333"/>')
        if self.x_label:
            self.parts.append(
                f'<text x="{(x0 + x1) / 2:.1f}" y="{self.height - 10}" '
                f'font-size="12" text-anchor="middle">{self.x_label}</text>')
        if self.y_label:
            self.parts.append(
                f'<text x="16" y="{(y0 + y1) / 2:.1f}" font-size="12" '
                f'text-anchor="middle" transform="rotate(-90 16 '
                f'{(y0 + y1) / 2:.1f})">{self.y_label}</text>')

    def series(self, series_id: str, label: str, points, color: str,
               dashed: bool = False, markers: bool = False) -> None:
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        coords = " ".join(f"{self._px(x):.2f},{self._py(y):.2f}" for x, y in points)
        body = [f'<g id="{series_id}" class="series">']
        if len(points) > 1:
            body.append(f'<polyline points="{coords}" fill="none" '
                        f'stroke="{color}" stroke-width="1.8"{dash}/>')
        if markers or len(points) == 1:
            for x, y in points:
                body.append(f'<circle cx="{self._px(x):.2f}" cy="{self._py(y):.2f}" '
                            f'r="3" fill="{color}"/>')
        body.append("</g>")
        self.parts.extend(body)
        # legend entry
        lx = self.width - self.right + 14
        ly = self.top + 14 + self._legend_row * 18
        self.parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 26}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"{dash}/>')
        self.parts.append(
            f'<text x="{lx + 32}" y="{ly}" font-size="11">{label}</text>')
        self._legend_row += 1

    def render(self) -> str:
        return "\n".join(self.parts) + "\n</svg>\n"


def _preset_order(reports) -> list[str]:
    seen: list[str] = []
    for r in reports:
        if r.preset not in seen:
            seen.append(r.preset)
    return seen


def emit_comparison_plot(reports: list[RunReport], path: str) -> None:
    """comparison.svg: per preset, success (solid) and miss (dashed) across
    the seeds of the comparison, one labeled series each."""
    if not reports:
        raise ValueError("emit_comparison_plot: no reports")
    presets = _preset_order(reports)
    chart = _Chart("Success and deadline-miss rates by configuration",
                   x_label="run (seed order)", y_label="rate")
    max_runs = max(sum(1 for r in reports if r.preset == p) for p in presets)
    chart.set_ranges((0.0, max(1.0, float(max_runs - 1))), (0.0, 1.0))
    chart.axes(x_ticks=range(max_runs),
               y_ticks=[i / 5 for i in range(6)], x_fmt="{:d}")
    for idx, preset in enumerate(presets):
        color = _PALETTE[idx % len(_PALETTE)]
        rows = [r for r in reports if r.preset == preset]
        succ = [(float(i), r.success_rate) for i, r in enumerate(rows)]
        miss = [(float(i), r.deadline_miss_rate) for i, r in enumerate(rows)]
        chart.series(f"series-{preset}-success", f"{preset} success", succ,
                     color, dashed=False, markers=True)
        chart.series(f"series-{preset}-miss", f"{preset} miss", miss,
                     color, dashed=True, markers=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(chart.render())


def emit_evolution_plot(report: RunReport, path: str, max_points: int = 2000) -> None:
    """evolution_<preset>.svg: threshold and measured failure rate over time."""
    n = len(report.series_t)
    if n == 0:
        raise ValueError("emit_evolution_plot: report has no series")
    stride = max(1, (n + max_points - 1) // max_points)
    idx = list(range(0, n, stride))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    ts = [report.series_t[i] for i in idx]
    chart = _Chart(
        f"Threshold evolution: {report.preset} (seed {report.seed})",
        x_label="simulation hours", y_label="value")
    t_max = ts[-1]
    chart.set_ranges((0.0, t_max), (0.0, 1.0))
    x_ticks = [t_max * i / 5 for i in range(6)]
    chart.axes(x_ticks=x_ticks, y_ticks=[i / 5 for i in range(6)], x_fmt="{:.0f}")
    chart.series("series-x-thresh", "x threshold",
                 [(t, report.series_x_thresh[i]) for t, i in zip(ts, idx)],
                 _PALETTE[0])
    chart.series("series-f-measured", "measured failure rate",
                 [(t, report.series_f_measured[i]) for t, i in zip(ts, idx)],
                 _PALETTE[1], dashed=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(chart.render())
