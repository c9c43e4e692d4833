"""Command line entry point: ``radiobo run | campaign | render | presets``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import config as config_mod
from .config import ConfigError
from .geo import GeoPoint
from .harness import error_column, run_campaign, run_single, summary_line
from .raster import RasterError, render_heatmap

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _point(text: str) -> GeoPoint:
    try:
        lat, lon = (float(v) for v in text.split(","))
        return GeoPoint(lat, lon)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LAT,LON, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="radiobo", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="fly one simulated mission")
    run.add_argument("config", help="TOML config path or preset name")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default=None, help="output directory (default: config output_dir)")

    camp = sub.add_parser("campaign", help="seeded Monte-Carlo batch of missions")
    camp.add_argument("config", help="TOML config path or preset name")
    camp.add_argument("--runs", type=int, default=20)
    camp.add_argument("--seed", type=int, default=None, help="base seed (default: config seed)")
    camp.add_argument("--out", default=None)
    camp.add_argument("--workers", type=int, default=1)

    ren = sub.add_parser("render", help="render a CSV raster to PGM (or PPM with markers)")
    ren.add_argument("raster")
    ren.add_argument("output")
    ren.add_argument("--truth", type=_point, default=None, metavar="LAT,LON")
    ren.add_argument("--estimate", type=_point, default=None, metavar="LAT,LON")

    sub.add_parser("presets", help="list bundled scenario presets")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "presets":
        for name in config_mod.PRESET_NAMES:
            print(name)
        return EXIT_OK

    if args.command == "render":
        markers = {k: v for k, v in (("truth", args.truth), ("estimate", args.estimate)) if v is not None}
        try:
            render_heatmap(args.raster, args.output, markers or None)
        except (OSError, RasterError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        return EXIT_OK

    try:
        cfg = config_mod.load(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "run":
            report = run_single(cfg, args.seed, args.out)
            print(summary_line(report))
        else:
            summary = run_campaign(cfg, args.runs, args.seed, args.out or cfg.output_dir, args.workers)
            for t in summary.estimate_times:
                print(
                    f"{error_column(t)}: mean {summary.mean_error_m[t]:.1f} m, "
                    f"median {summary.median_error_m[t]:.1f} m"
                )
            print(f"runs ok: {summary.run_count}, failed: {summary.failed_count}")
    except Exception as exc:
        logging.getLogger("radiobo").debug("runtime failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
