"""Sweep the receiver saturation level on the near-transmitter scenario.

With a low saturation level the field near the transmitter is a flat plateau,
so more samples stop sharpening the estimate. The sweep prints the median
early and final errors per saturation level, showing where the final estimate
stops improving on the early one.

Usage:
    python3 scripts/saturation_plateau.py --runs 20 --levels -25 -50 -65 -72
"""

from __future__ import annotations

import argparse
import dataclasses

from radiobo.config import load_preset
from radiobo.harness import run_campaign


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--levels", type=float, nargs="+", default=[-25.0, -50.0, -65.0, -72.0])
    args = ap.parse_args()

    base = load_preset("trial1")
    print(f"{'saturation':>11}{'early med':>11}{'final med':>11}{'ratio':>8}")
    for level in args.levels:
        template = dataclasses.replace(base.channel.template, saturation_db=level)
        cfg = dataclasses.replace(base, channel=dataclasses.replace(base.channel, template=template))
        s = run_campaign(cfg, args.runs, args.seed)
        early, final = s.estimate_times[0], s.estimate_times[-1]
        m3, m10 = s.median_error_m[early], s.median_error_m[final]
        print(f"{level:>9.0f}dB{m3:>10.1f}m{m10:>10.1f}m{m10 / m3:>8.2f}")


if __name__ == "__main__":
    main()
