"""How completion depends on task length: scale every duration and rerun the matrix.

With the default duration model the cluster is lightly loaded and requests
rarely wait long enough to hit the failure timeout.  Stretching task
durations raises the load until fragmentation starts to cost applications.
"""

import argparse
import dataclasses
import itertools
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from yarnsim.cli import simulate
from yarnsim.config import load_config
from yarnsim.policies import SpcKind
from yarnsim.queues import ScenarioKind

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = (ScenarioKind.ONE_QUEUE, ScenarioKind.SEPARATE_QUEUE, ScenarioKind.MERGED_QUEUE)


def scaled(cfg, k):
    d = cfg.durations
    return dataclasses.replace(cfg, durations=dataclasses.replace(
        d,
        two_stage_base_s=d.two_stage_base_s * k,
        two_stage_rate_s_per_mb=d.two_stage_rate_s_per_mb * k,
        dag_base_s=d.dag_base_s * k,
        dcg_base_s=d.dcg_base_s * k,
    ))


def cell(args):
    cfg, k, spc, scen, seed = args
    report, _ = simulate(scaled(cfg, k).with_overrides(seed=seed, spc=spc, scenario=scen))
    return k, spc.value, scen.value, report.completion_rate, report.avg_concurrent_containers


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(ROOT / "paper.conf"))
    ap.add_argument("--scales", type=float, nargs="+", default=[1, 2, 3, 4])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)

    cfg = load_config(args.config)
    tasks = [
        (cfg, k, spc, scen, cfg.seed + s)
        for k, spc, scen, s in itertools.product(args.scales, SpcKind, SCENARIOS, range(args.seeds))
    ]
    with ProcessPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(cell, tasks))

    for k in args.scales:
        rows = [r for r in results if r[0] == k]
        cells = {}
        for _, spc, scen, rate, load in rows:
            cells.setdefault((spc, scen), []).append((rate, load))
        full = sum(all(rate == 100.0 for rate, _ in v) for v in cells.values())
        load = statistics.fmean(load for *_, load in rows)
        print(f"duration x{k:g}: mean running containers {load:5.1f} of 60, "
              f"cells never losing an app {full}/12")
        for (spc, scen), v in cells.items():
            print(f"    {spc:<10} {scen:<15} {statistics.fmean(r for r, _ in v):7.2f}%")
    return 0


if __name__ == "__main__":
    sys.exit(main())
