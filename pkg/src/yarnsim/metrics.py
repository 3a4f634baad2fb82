"""The six workload metrics, computed purely from an event log."""

from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from . import eventlog as ev
from .eventlog import EventLog

STREAMING = "streaming"


@dataclass(frozen=True)
class AppOutcome:
    app_id: str
    app_type: str
    queue: str
    submitted: float
    finished: float | None
    outcome: str  # completed | failed | unfinished


@dataclass(frozen=True)
class DelayStats:
    count: int = 0
    q1: float | None = None
    median: float | None = None
    q3: float | None = None
    mean: float | None = None
    std: float | None = None


@dataclass
class MetricsReport:
    apps_total: int = 0
    apps_completed: int = 0
    completion_rate: float = 0.0
    cumulative_completion: list[tuple[float, float]] = field(default_factory=list)
    turnaround_s: float = 0.0
    total_containers_launched: int = 0
    avg_concurrent_containers: float = 0.0
    streaming_throughput: list[tuple[int, int]] = field(default_factory=list)
    total_delay: DelayStats = DelayStats()
    concurrency: list[tuple[float, int]] = field(default_factory=list)
    apps: list[AppOutcome] = field(default_factory=list)
    end_time: float = 0.0


def app_outcomes(log: EventLog) -> list[AppOutcome]:
    submitted = {}
    ended = {}
    for r in log:
        if r.kind == ev.SUBMIT:
            submitted[r.app] = r
        elif r.kind in (ev.APP_COMPLETE, ev.APP_FAIL):
            ended[r.app] = r
    out = []
    for app_id, s in submitted.items():
        e = ended.get(app_id)
        if e is None:
            outcome, when = "unfinished", None
        else:
            outcome = "completed" if e.kind == ev.APP_COMPLETE else "failed"
            when = e.time
        out.append(AppOutcome(app_id, s.detail, s.queue, s.time, when, outcome))
    return out


def completion_rate(log: EventLog) -> float:
    apps = app_outcomes(log)
    if not apps:
        return 0.0
    return 100.0 * sum(a.outcome == "completed" for a in apps) / len(apps)


def turnaround(log: EventLog) -> float:
    """First submission to the last non-streaming app's end, failures included."""
    apps = app_outcomes(log)
    ends = [a.finished for a in apps if a.app_type != STREAMING and a.finished is not None]
    if not ends:
        return 0.0
    return max(ends) - min(a.submitted for a in apps)


def _run_end(log: EventLog) -> float:
    ends = [r.time for r in log if r.kind == ev.RUN_END]
    return ends[-1] if ends else (log[-1].time if log else 0.0)


def concurrency_steps(log: EventLog) -> list[tuple[float, int]]:
    """(time, running containers) after every instant where the count changed."""
    steps: list[tuple[float, int]] = []
    running = 0
    for r in log:
        if r.kind == ev.CONTAINER_START:
            running += 1
        elif r.kind == ev.CONTAINER_END:
            running -= 1
        else:
            continue
        if steps and steps[-1][0] == r.time:
            steps[-1] = (r.time, running)
        else:
            steps.append((r.time, running))
    return steps


def system_load(log: EventLog) -> tuple[int, float]:
    """(containers started, time-averaged running containers over the turnaround window)."""
    total = sum(1 for r in log if r.kind == ev.CONTAINER_START)
    apps = app_outcomes(log)
    span = turnaround(log)
    if not apps or span <= 0:
        return total, 0.0
    t0 = min(a.submitted for a in apps)
    t1 = t0 + span
    area = 0.0
    prev_t, prev_n = t0, 0
    for t, n in concurrency_steps(log):
        if t > t1:
            break
        if t > prev_t:
            area += prev_n * (t - prev_t)
            prev_t = t
        prev_n = n
    area += prev_n * (t1 - prev_t)
    return total, area / span


def streaming_throughput(log: EventLog) -> list[tuple[int, int]]:
    """Stream batches finished in each simulated minute."""
    finishes = [r.time for r in log if r.kind == ev.BATCH_FINISH]
    end = _run_end(log)
    minutes = math.ceil(end / 60.0) if end > 0 else 0
    if finishes:
        minutes = max(minutes, int(max(finishes) // 60) + 1)
    counts = [0] * minutes
    for t in finishes:
        counts[int(t // 60)] += 1
    return list(enumerate(counts))


def hinges(values: list[float]) -> tuple[float, float, float]:
    """Quartiles by the median-of-halves rule; odd-length halves share the median."""
    xs = sorted(values)
    n = len(xs)
    half = n // 2
    lower = xs[: half + (n % 2)]
    upper = xs[half:]
    return statistics.median(lower), statistics.median(xs), statistics.median(upper)


def batch_delays(log: EventLog) -> list[float]:
    arrivals = {}
    delays = []
    for r in log:
        if r.kind == ev.BATCH_ARRIVE:
            arrivals[(r.app, r.detail)] = r.time
        elif r.kind == ev.BATCH_FINISH:
            delays.append(r.time - arrivals[(r.app, r.detail)])
    return delays


def total_delay_stats(log: EventLog) -> DelayStats:
    delays = batch_delays(log)
    if not delays:
        return DelayStats()
    q1, med, q3 = hinges(delays)
    return DelayStats(len(delays), q1, med, q3, statistics.fmean(delays), statistics.pstdev(delays))


def cumulative_completion(log: EventLog, bucket_s: float = 60.0) -> list[tuple[float, float]]:
    apps = app_outcomes(log)
    if not apps:
        return []
    done = sorted(a.finished for a in apps if a.outcome == "completed")
    end = max([_run_end(log), *done]) if done else _run_end(log)
    buckets = max(1, math.ceil(end / bucket_s))
    series = []
    i = 0
    for k in range(buckets + 1):
        t = k * bucket_s
        while i < len(done) and done[i] <= t:
            i += 1
        series.append((t, 100.0 * i / len(apps)))
    return series


def compute_report(log: EventLog, bucket_s: float = 60.0) -> MetricsReport:
    apps = app_outcomes(log)
    total, avg = system_load(log)
    return MetricsReport(
        apps_total=len(apps),
        apps_completed=sum(a.outcome == "completed" for a in apps),
        completion_rate=completion_rate(log),
        cumulative_completion=cumulative_completion(log, bucket_s),
        turnaround_s=turnaround(log),
        total_containers_launched=total,
        avg_concurrent_containers=avg,
        streaming_throughput=streaming_throughput(log),
        total_delay=total_delay_stats(log),
        concurrency=concurrency_steps(log),
        apps=apps,
        end_time=_run_end(log),
    )


# -- CSV output ------------------------------------------------------------

APPS_COLUMNS = ("app_id", "type", "queue", "submitted", "finished", "outcome")
SERIES_COLUMNS = ("series", "x", "value")
SUMMARY_COLUMNS = (
    "spc", "scenario", "seed",
    "apps_total", "apps_completed", "completion_rate", "turnaround_s",
    "total_containers", "avg_concurrent_containers",
    "stream_batches", "throughput_mean_per_min",
    "delay_q1", "delay_median", "delay_q3", "delay_mean", "delay_std",
)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def summary_row(report: MetricsReport, **labels) -> dict[str, str]:
    tp = [n for _, n in report.streaming_throughput]
    d = report.total_delay
    row = {
        "spc": labels.get("spc", ""),
        "scenario": labels.get("scenario", ""),
        "seed": labels.get("seed", ""),
        "apps_total": report.apps_total,
        "apps_completed": report.apps_completed,
        "completion_rate": report.completion_rate,
        "turnaround_s": report.turnaround_s,
        "total_containers": report.total_containers_launched,
        "avg_concurrent_containers": report.avg_concurrent_containers,
        "stream_batches": d.count,
        "throughput_mean_per_min": statistics.fmean(tp) if tp else 0.0,
        "delay_q1": d.q1,
        "delay_median": d.median,
        "delay_q3": d.q3,
        "delay_mean": d.mean,
        "delay_std": d.std,
    }
    return {k: _fmt(v) for k, v in row.items()}


def _write(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        w.writerows(rows)


def write_apps_csv(report: MetricsReport, path: str | Path) -> None:
    _write(Path(path), APPS_COLUMNS, (
        (a.app_id, a.app_type, a.queue, _fmt(a.submitted), _fmt(a.finished), a.outcome)
        for a in report.apps
    ))


def write_series_csv(report: MetricsReport, path: str | Path) -> None:
    rows = [("cumulative_completion", _fmt(t), _fmt(v)) for t, v in report.cumulative_completion]
    rows += [("throughput_per_minute", m, n) for m, n in report.streaming_throughput]
    rows += [("concurrency", _fmt(t), n) for t, n in report.concurrency]
    _write(Path(path), SERIES_COLUMNS, rows)


def write_summary_csv(report: MetricsReport, path: str | Path, **labels) -> None:
    row = summary_row(report, **labels)
    _write(Path(path), SUMMARY_COLUMNS, [[row[c] for c in SUMMARY_COLUMNS]])
