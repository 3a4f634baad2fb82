"""Run the 4 SPC x 3 scenario x N seed matrix and print the per-cell table."""

import argparse
import csv
import sys
from pathlib import Path

from yarnsim.cli import sweep_command
from yarnsim.config import load_config

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(ROOT / "paper.conf"))
    ap.add_argument("--out", default="results/matrix")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)

    cfg = load_config(args.config)
    status = sweep_command(cfg, args.out, args.seeds, jobs=args.jobs)
    if status:
        return status
    rows = list(csv.DictReader(open(Path(args.out) / "matrix.csv")))
    print(f"{'spc':<10} {'scenario':<15} {'completion %':>14} {'turnaround s':>16} {'containers':>12}")
    for r in rows:
        print(
            f"{r['spc']:<10} {r['scenario']:<15} "
            f"{float(r['completion_rate_mean']):7.2f}±{float(r['completion_rate_std']):<5.2f} "
            f"{float(r['turnaround_s_mean']):9.1f}±{float(r['turnaround_s_std']):<6.1f} "
            f"{float(r['total_containers_mean']):12.1f}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
