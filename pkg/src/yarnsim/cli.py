"""Command line: ``run``, ``sweep`` and ``replay``."""

from __future__ import annotations

import argparse
import csv
import itertools
import logging
import os
import shutil
import statistics
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import RunConfig, load_config
from .engine import Simulator
from .eventlog import EventLog
from .metrics import (
    MetricsReport,
    compute_report,
    summary_row,
    write_apps_csv,
    write_series_csv,
    write_summary_csv,
)
from .policies import SpcKind
from .queues import ScenarioKind
from .resources import ConfigError

log = logging.getLogger("yarnsim")

RUN_FILES = ("events.log", "apps.csv", "series.csv", "summary.csv")
MATRIX_METRICS = (
    "completion_rate", "turnaround_s", "total_containers", "avg_concurrent_containers",
    "throughput_mean_per_min", "delay_median", "delay_mean",
)


def simulate(cfg: RunConfig) -> tuple[MetricsReport, EventLog]:
    sim = Simulator(
        cfg.cluster, cfg.apps(), cfg.spc, cfg.scenario, cfg.durations, cfg.seed, **cfg.sim_options()
    )
    events = sim.run()
    return compute_report(events), events


def _labels(cfg: RunConfig) -> dict:
    return {"spc": cfg.spc.value, "scenario": cfg.scenario.kind.value, "seed": cfg.seed}


def write_run(out: Path, report: MetricsReport, events: EventLog, labels: dict) -> None:
    """Write the four per-run files, all or nothing."""
    out.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out))
    try:
        events.save(staging / "events.log")
        write_apps_csv(report, staging / "apps.csv")
        write_series_csv(report, staging / "series.csv")
        write_summary_csv(report, staging / "summary.csv", **labels)
        for name in RUN_FILES:
            os.replace(staging / name, out / name)
    finally:
        shutil.rmtree(staging, ignore_errors=True)


def run_command(cfg: RunConfig, out: str | Path) -> int:
    report, events = simulate(cfg)
    try:
        write_run(Path(out), report, events, _labels(cfg))
    except OSError as exc:
        print(f"error: cannot write results to {out}: {exc}", file=sys.stderr)
        return 2
    print(
        f"{cfg.spc.value}/{cfg.scenario.kind.value} seed {cfg.seed}: "
        f"{report.apps_completed}/{report.apps_total} completed ({report.completion_rate:.2f}%), "
        f"turnaround {report.turnaround_s:.1f} s, {report.total_containers_launched} containers"
    )
    return 0


def _cell(args):
    cfg, out = args
    report, events = simulate(cfg)
    labels = _labels(cfg)
    write_run(out, report, events, labels)
    return summary_row(report, **labels)


def aggregate(rows: list[dict]) -> list[dict]:
    """Mean and population stddev per (spc, scenario) over seeds."""
    cells: dict[tuple[str, str], list[dict]] = {}
    for r in rows:
        cells.setdefault((r["spc"], r["scenario"]), []).append(r)
    out = []
    for (spc, scenario), group in cells.items():
        agg = {"spc": spc, "scenario": scenario, "runs": str(len(group))}
        for m in MATRIX_METRICS:
            vals = [float(r[m]) for r in group if r[m] != ""]
            agg[f"{m}_mean"] = repr(statistics.fmean(vals)) if vals else ""
            agg[f"{m}_std"] = repr(statistics.pstdev(vals)) if vals else ""
        out.append(agg)
    return out


def matrix_columns() -> list[str]:
    cols = ["spc", "scenario", "runs"]
    for m in MATRIX_METRICS:
        cols += [f"{m}_mean", f"{m}_std"]
    return cols


def sweep_command(
    cfg: RunConfig,
    out: str | Path,
    seeds: int,
    spcs: list[SpcKind] | None = None,
    scenarios: list[ScenarioKind] | None = None,
    jobs: int = 1,
) -> int:
    if seeds < 1:
        print("error: --seeds must be at least 1", file=sys.stderr)
        return 2
    out = Path(out)
    spcs = spcs or list(SpcKind)
    scenarios = scenarios or [ScenarioKind.ONE_QUEUE, ScenarioKind.SEPARATE_QUEUE, ScenarioKind.MERGED_QUEUE]
    tasks = []
    for spc, scen, k in itertools.product(spcs, scenarios, range(seeds)):
        c = cfg.with_overrides(seed=cfg.seed + k, spc=spc, scenario=scen)
        tasks.append((c, out / "runs" / f"{spc.value}__{scen.value}__seed{c.seed}"))
    rows = []
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for row in pool.map(_cell, tasks):
                    rows.append(row)
        else:
            for t in tasks:
                rows.append(_cell(t))
    except Exception as exc:  # noqa: BLE001 - report and abort the whole sweep
        print(f"error: sweep aborted after {len(rows)} of {len(tasks)} cells: {exc}", file=sys.stderr)
        for r in rows:
            print(f"  done: {r['spc']} {r['scenario']} seed {r['seed']}", file=sys.stderr)
        return 1
    cols = matrix_columns()
    with open(out / "matrix.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        w.writerows(aggregate(rows))
    print(f"{len(rows)} runs aggregated into {out / 'matrix.csv'}")
    return 0


def replay_command(log_path: str | Path, out: str | Path | None = None) -> int:
    events = EventLog.load(log_path)
    report = compute_report(events)
    row = summary_row(report)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_apps_csv(report, out / "apps.csv")
        write_series_csv(report, out / "series.csv")
        write_summary_csv(report, out / "summary.csv")
    for k, v in row.items():
        if k not in ("spc", "scenario", "seed"):
            print(f"{k}: {v}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="yarnsim", description="YARN scheduling-policy simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one configuration")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--spc", choices=[s.value for s in SpcKind])
    r.add_argument("--scenario", choices=[s.value for s in ScenarioKind if s is not ScenarioKind.CUSTOM])

    s = sub.add_parser("sweep", help="run every SPC x scenario x seed cell")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seeds", type=int, default=5)
    s.add_argument("--spc", action="append", choices=[x.value for x in SpcKind])
    s.add_argument("--scenario", action="append",
                   choices=[x.value for x in ScenarioKind if x is not ScenarioKind.CUSTOM])
    s.add_argument("--jobs", type=int, default=1)

    rp = sub.add_parser("replay", help="recompute metrics from a saved event log")
    rp.add_argument("--log", required=True)
    rp.add_argument("--out")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        if args.command == "replay":
            return replay_command(args.log, args.out)
        cfg = load_config(args.config)
        if args.command == "run":
            cfg = cfg.with_overrides(seed=args.seed, spc=args.spc, scenario=args.scenario)
            return run_command(cfg, args.out)
        return sweep_command(
            cfg,
            args.out,
            args.seeds,
            [SpcKind(x) for x in args.spc] if args.spc else None,
            [ScenarioKind(x) for x in args.scenario] if args.scenario else None,
            args.jobs,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
