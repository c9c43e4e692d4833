"""Single-run and Monte-Carlo campaign drivers that write artifacts to disk."""

from __future__ import annotations

import csv
import json
import logging
import math
import statistics
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .config import RunConfig
from .geo import LocalFrame
from .mission import Mission, MissionReport
from .raster import render_heatmap, write_raster

log = logging.getLogger(__name__)

LOG_FILE = "mission_log.jsonl"
TRAJECTORY_FILE = "trajectory.csv"
MEAN_RASTER = "posterior_mean.csv"
STD_RASTER = "posterior_std.csv"
SUMMARY_FILE = "summary.json"
MEAN_IMAGE = "posterior_mean.pgm"
STD_IMAGE = "posterior_std.pgm"
OVERLAY_IMAGE = "posterior_mean_markers.ppm"


@dataclass
class CampaignSummary:
    rows: list[dict]
    estimate_times: tuple[float, ...]
    mean_error_m: dict = field(default_factory=dict)
    median_error_m: dict = field(default_factory=dict)
    run_count: int = 0
    failed_count: int = 0

    @classmethod
    def from_rows(cls, rows: list[dict], estimate_times) -> "CampaignSummary":
        ok = [r for r in rows if r["status"] == "ok"]
        mean, median = {}, {}
        for t in estimate_times:
            vals = [r[error_column(t)] for r in ok if not math.isnan(r[error_column(t)])]
            mean[t] = statistics.fmean(vals) if vals else math.nan
            median[t] = statistics.median(vals) if vals else math.nan
        return cls(rows, tuple(estimate_times), mean, median, len(ok), len(rows) - len(ok))

    def to_dict(self) -> dict:
        return {
            "run_count": self.run_count,
            "failed_count": self.failed_count,
            "mean_error_m": {str(t): v for t, v in self.mean_error_m.items()},
            "median_error_m": {str(t): v for t, v in self.median_error_m.items()},
        }


def error_column(t: float) -> str:
    return f"error_{t:g}s_m"


def summary_line(report: MissionReport) -> str:
    parts = []
    for t, p in sorted(report.estimates.items()):
        err = report.errors_m.get(t, math.nan)
        parts.append(f"t={t:g}s est=({p.lat:.7f},{p.lon:.7f}) err={err:.1f}m")
    return "; ".join(parts) if parts else "no estimates"


def write_artifacts(report: MissionReport, mission: Mission, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / LOG_FILE, "w") as fh:
        for entry in report.log:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")

    frame = LocalFrame.at(mission.config.takeoff)
    with open(out_dir / TRAJECTORY_FILE, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_s", "lat", "lon", "east_m", "north_m"])
        for t, lat, lon in report.trajectory:
            e, n = frame.to_local([[lat, lon]])[0]
            w.writerow([repr(t), repr(lat), repr(lon), repr(float(e)), repr(float(n))])

    field_ = mission.posterior("flight")
    write_raster(out_dir / MEAN_RASTER, field_.grid, field_.mean, "posterior_mean_db")
    write_raster(out_dir / STD_RASTER, field_.grid, field_.std, "posterior_std_db")
    render_heatmap(out_dir / MEAN_RASTER, out_dir / MEAN_IMAGE)
    render_heatmap(out_dir / STD_RASTER, out_dir / STD_IMAGE)
    markers = {"truth": mission.channel.tx_location}
    times = sorted(report.estimates)
    if times:
        markers["estimate"] = report.estimates[times[-1]]
    if len(times) > 1:
        markers["early"] = report.estimates[times[0]]
    render_heatmap(out_dir / MEAN_RASTER, out_dir / OVERLAY_IMAGE, markers)

    summary = report.to_dict()
    summary.pop("records")
    summary.pop("trajectory")
    summary["tx"] = [mission.channel.tx_location.lat, mission.channel.tx_location.lon]
    summary["seed"] = mission.seed
    (out_dir / SUMMARY_FILE).write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")


def run_single(config: RunConfig, seed: int | None = None, out_dir=None, write: bool = True) -> MissionReport:
    seed = config.seed if seed is None else seed
    channel = config.channel.for_seed(config.mission.rover_grid, seed)
    mission = Mission(config.mission, channel, seed)
    report = mission.run()
    if write:
        write_artifacts(report, mission, Path(out_dir if out_dir is not None else config.output_dir))
    return report


def _campaign_row(config: RunConfig, seed: int, out_dir: Path | None) -> dict:
    row = {"seed": seed, "status": "ok"}
    channel = config.channel.for_seed(config.mission.rover_grid, seed)
    row["tx_lat"], row["tx_lon"] = channel.tx_location.lat, channel.tx_location.lon
    try:
        run_dir = None if out_dir is None else out_dir / f"run_{seed:05d}"
        report = run_single(config, seed, run_dir, write=run_dir is not None)
    except Exception as exc:  # one bad run must not sink the campaign
        log.error("run with seed %d failed: %s", seed, exc)
        log.debug("%s", traceback.format_exc())
        row["status"] = f"failed: {type(exc).__name__}: {exc}"
        for t in config.mission.estimate_times_s:
            row[error_column(t)] = math.nan
        return row
    for t in config.mission.estimate_times_s:
        row[error_column(t)] = report.errors_m.get(t, math.nan)
    return row


def run_campaign(
    config: RunConfig,
    n_runs: int,
    base_seed: int | None = None,
    out_dir=None,
    workers: int = 1,
) -> CampaignSummary:
    """Run missions with seeds ``base .. base+n_runs-1`` and tabulate errors.

    With ``out_dir`` set, each run writes its artifacts to ``run_<seed>/`` and
    the coordinator writes ``runs.csv`` and ``summary.json``.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    base = config.seed if base_seed is None else base_seed
    seeds = list(range(base, base + n_runs))
    out = Path(out_dir) if out_dir is not None else None
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_campaign_row, [config] * n_runs, seeds, [out] * n_runs))
    else:
        rows = [_campaign_row(config, s, out) for s in seeds]

    summary = CampaignSummary.from_rows(rows, config.mission.estimate_times_s)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        cols = ["seed", "status", "tx_lat", "tx_lon"] + [error_column(t) for t in summary.estimate_times]
        with open(out / "runs.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            for r in rows:
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        (out / SUMMARY_FILE).write_text(json.dumps(summary.to_dict(), sort_keys=True, indent=1) + "\n")
    return summary
