"""Campaign over the three bundled trial presets and print an error table.

Usage:
    python3 scripts/reproduce_table.py --runs 20 --out runs/table

Each preset gets ``--runs`` seeded missions (seeds base..base+runs-1). The
table lists the mean and median localization error at the early and final
estimate times, plus wall time per preset.
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

from radiobo.config import load_preset
from radiobo.geo import LocalFrame
from radiobo.harness import run_campaign

PRESETS = ("trial1", "trial2", "trial3")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None, help="write per-run artifacts under this directory")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    header = f"{'preset':<10}{'tx dist':>9}{'early mean':>12}{'early med':>11}{'final mean':>12}{'final med':>11}{'time':>8}"
    print(header)
    print("-" * len(header))
    for name in PRESETS:
        cfg = load_preset(name)
        tx = cfg.channel.template.tx_location
        dist = LocalFrame.at(cfg.mission.takeoff).distance_m(cfg.mission.takeoff, tx)
        out = Path(args.out) / name if args.out else None
        start = time.perf_counter()
        s = run_campaign(cfg, args.runs, args.seed, out, args.workers)
        elapsed = time.perf_counter() - start
        early, final = s.estimate_times[0], s.estimate_times[-1]
        print(
            f"{name:<10}{dist:>8.0f}m{s.mean_error_m[early]:>11.1f}m{s.median_error_m[early]:>10.1f}m"
            f"{s.mean_error_m[final]:>11.1f}m{s.median_error_m[final]:>10.1f}m{elapsed:>7.1f}s"
        )
        if s.failed_count:
            print(f"  ({s.failed_count} failed runs)")


if __name__ == "__main__":
    main()
