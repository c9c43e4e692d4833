"""Mission state machine for autonomous transmitter localization.

A mission is a sequence of discrete events (climb, travel leg, stationary
sample, calibration); the simulated clock only moves inside
:meth:`Mission._advance`, which is also where timed estimates are captured.

Phase graph::

    Takeoff -> FirstSample -> StartupWaypoints -> AutonomousBO <-> AuxCircle
    FirstSample -> AuxCircle            (calibration failsafe)
    any -> Done                         (mission clock expired)
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from . import acquisition, gp
from .acquisition import UcbSchedule
from .channel import ChannelModel, draw_bins
from .geo import GeoGrid, GeoPoint, LocalFrame, clamp_to_grid, contains, geo_to_local, local_to_geo
from .gp import FittedGP, PosteriorField, TrainingSet
from .kernels import HyperBounds, HyperParams
from .lbfgsb import OptOptions
from .sample_filter import (
    CalibrationFailedError,
    FilterState,
    SampleRecord,
    calibrate_first_sample,
    evaluate,
    summarize_arrays,
)


class Phase(str, Enum):
    TAKEOFF = "Takeoff"
    FIRST_SAMPLE = "FirstSample"
    STARTUP_WAYPOINTS = "StartupWaypoints"
    AUTONOMOUS_BO = "AutonomousBO"
    AUX_CIRCLE = "AuxCircle"
    DONE = "Done"


LEGAL_TRANSITIONS = {
    (Phase.TAKEOFF, Phase.FIRST_SAMPLE),
    (Phase.FIRST_SAMPLE, Phase.STARTUP_WAYPOINTS),
    (Phase.FIRST_SAMPLE, Phase.AUX_CIRCLE),
    (Phase.STARTUP_WAYPOINTS, Phase.AUTONOMOUS_BO),
    (Phase.AUTONOMOUS_BO, Phase.AUX_CIRCLE),
    (Phase.AUX_CIRCLE, Phase.AUTONOMOUS_BO),
} | {(p, Phase.DONE) for p in Phase if p is not Phase.DONE}

SIMILAR_POINTS = "similar-points"
MAX_REJECTS = "max-rejects"
CALIBRATION_FAILED = "calibration-failed"


@dataclass(frozen=True)
class EstimatorConfig:
    init: HyperParams = HyperParams()
    bounds: HyperBounds = HyperBounds()
    mean_g: float = -85.0
    optimizer: OptOptions = OptOptions()
    n_restarts: int = 2
    ucb_decay: float = 0.95


@dataclass(frozen=True)
class FilterConfig:
    initial_threshold: float = 35.0
    escalation_factor: float = 2.0
    max_retakes: int = 10


@dataclass(frozen=True)
class MissionConfig:
    takeoff: GeoPoint
    flight_grid: GeoGrid
    rover_grid: GeoGrid
    startup_waypoints: tuple[GeoPoint, ...]
    altitude_m: float = 40.0
    climb_rate_mps: float = 1.0
    cruise_speed_mps: float = 10.0
    sample_duration_s: float = 6.0
    bins_per_second: float = 10.0
    mission_duration_s: float = 600.0
    estimate_times_s: tuple[float, ...] = (180.0, 600.0)
    similar_point_radius_m: float = 20.0
    similar_point_count: int = 5
    max_rejects: int = 8
    aux_circle_radius_m: float = 60.0
    aux_circle_points: int = 8
    heading: str = "northwest"
    estimator: EstimatorConfig = EstimatorConfig()
    filter: FilterConfig = FilterConfig()

    def __post_init__(self):
        times = tuple(float(t) for t in self.estimate_times_s)
        object.__setattr__(self, "estimate_times_s", times)
        object.__setattr__(self, "startup_waypoints", tuple(self.startup_waypoints))
        if list(times) != sorted(times) or any(t < 0 or t > self.mission_duration_s for t in times):
            raise ValueError("estimate_times_s must be sorted and within [0, mission_duration_s]")
        if not contains(self.flight_grid, self.takeoff):
            raise ValueError("takeoff point lies outside the flight boundary")
        for wp in self.startup_waypoints:
            if not contains(self.flight_grid, wp):
                raise ValueError(f"startup waypoint {wp} lies outside the flight boundary")
        for name in ("cruise_speed_mps", "climb_rate_mps", "sample_duration_s", "bins_per_second"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.n_bins < 2:
            raise ValueError("a sample needs at least 2 bins")
        if self.similar_point_count < 1 or self.aux_circle_points < 1 or self.max_rejects < 1:
            raise ValueError("trigger counts must be >= 1")

    @property
    def climb_time_s(self) -> float:
        return self.altitude_m / self.climb_rate_mps

    @property
    def n_bins(self) -> int:
        return int(round(self.sample_duration_s * self.bins_per_second))


@dataclass
class MissionState:
    phase: Phase
    clock_s: float
    position: GeoPoint
    training: TrainingSet
    filter: FilterState
    schedule: UcbSchedule
    recent_targets: deque
    aux_triggered_by: str | None = None
    estimates: dict = field(default_factory=dict)
    queue: list = field(default_factory=list)
    at_target: bool = False
    fitted: FittedGP | None = None
    params: HyperParams | None = None
    # clock bookkeeping, summed separately so the total can be audited
    climb_time_s: float = 0.0
    travel_time_s: float = 0.0
    sample_time_s: float = 0.0


@dataclass
class MissionReport:
    estimates: dict  # estimate time (s) -> GeoPoint on the rover grid
    estimate_clock: dict  # estimate time -> clock at the moment it was taken
    errors_m: dict  # estimate time -> localization error in meters
    hyperparams: HyperParams | None
    records: list
    trajectory: list  # (t, lat, lon)
    log: list
    phases: list
    final_clock_s: float
    final_state: MissionState | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "estimates": {str(t): [p.lat, p.lon] for t, p in self.estimates.items()},
            "estimate_clock": {str(t): c for t, c in self.estimate_clock.items()},
            "errors_m": {str(t): e for t, e in self.errors_m.items()},
            "hyperparams": None if self.hyperparams is None else asdict(self.hyperparams),
            "records": [_record_dict(r) for r in self.records],
            "trajectory": [list(row) for row in self.trajectory],
            "phases": list(self.phases),
            "final_clock_s": self.final_clock_s,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _record_dict(r: SampleRecord) -> dict:
    return {
        "lat": r.location.lat,
        "lon": r.location.lon,
        "timestamp": r.timestamp,
        "mean_power_db": r.mean_power_db,
        "quality_variance": r.quality_variance,
        "accepted": r.accepted,
    }


def check_aux_triggers(state: MissionState, config: MissionConfig) -> str | None:
    targets = list(state.recent_targets)
    n = config.similar_point_count
    if len(targets) >= n:
        last = targets[-n:]
        frame = LocalFrame.at(last[0])
        en = np.array([geo_to_local(frame, p) for p in last])
        spread = np.hypot(*(en - en.mean(axis=0)).T)
        if np.all(spread <= config.similar_point_radius_m):
            return SIMILAR_POINTS
    if state.filter.rejected_count >= config.max_rejects:
        return MAX_REJECTS
    return None


def make_aux_circle(
    center: GeoPoint,
    config: MissionConfig,
    flight_grid: GeoGrid,
    current_position: GeoPoint | None = None,
) -> list[GeoPoint]:
    """Evenly spaced ring of waypoints around ``center``, clamped into the flight area.

    Points are ordered counter-clockwise starting from east, then rotated so
    the one nearest ``current_position`` (default: the center) comes first.
    """
    frame = LocalFrame.at(center)
    n = config.aux_circle_points
    r = config.aux_circle_radius_m
    angles = 2.0 * math.pi * np.arange(n) / n
    pts = [clamp_to_grid(flight_grid, local_to_geo(frame, r * math.cos(a), r * math.sin(a))) for a in angles]
    here = current_position or center
    dists = [frame.distance_m(here, p) for p in pts]
    start = int(np.argmin(dists))
    return pts[start:] + pts[:start]


class Mission:
    """One simulated flight. Owns its random stream and all mutable state."""

    def __init__(self, config: MissionConfig, channel: ChannelModel, seed: int):
        self.config = config
        self.channel = channel
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.frame = LocalFrame.at(config.takeoff)
        est = config.estimator
        self.state = MissionState(
            phase=Phase.TAKEOFF,
            clock_s=0.0,
            position=config.takeoff,
            training=TrainingSet.empty(),
            filter=FilterState(config.filter.initial_threshold, config.filter.escalation_factor),
            schedule=UcbSchedule(est.ucb_decay, 0),
            recent_targets=deque(maxlen=config.similar_point_count),
            params=est.bounds.clip(est.init),
        )
        self.records: list[SampleRecord] = []
        self.trajectory: list[tuple[float, float, float]] = [(0.0, config.takeoff.lat, config.takeoff.lon)]
        self.log: list[dict] = []
        self.phases: list[str] = [Phase.TAKEOFF.value]
        self.estimate_clock: dict[float, float] = {}
        self._posterior_cache: dict[str, PosteriorField] = {}
        self._capture_estimates()

    # -- clock and estimates -------------------------------------------------

    def _advance(self, dt: float, kind: str) -> None:
        s = self.state
        s.clock_s += dt
        if kind == "climb":
            s.climb_time_s += dt
        elif kind == "travel":
            s.travel_time_s += dt
        else:
            s.sample_time_s += dt
        self._capture_estimates()

    def _capture_estimates(self) -> None:
        s = self.state
        for t in self.config.estimate_times_s:
            if t not in s.estimates and t <= s.clock_s:
                p = gp.argmax_mean(self.posterior("rover"))
                s.estimates[t] = p
                self.estimate_clock[t] = s.clock_s
                self._emit("estimate", estimate_time_s=t, est_lat=p.lat, est_lon=p.lon)

    def posterior(self, which: str) -> PosteriorField:
        if which not in self._posterior_cache:
            grid = self.config.rover_grid if which == "rover" else self.config.flight_grid
            s = self.state
            if s.fitted is None:
                field_ = gp.prior_field(grid, s.params, self.config.estimator.mean_g)
            else:
                field_ = gp.posterior(s.fitted, grid)
            self._posterior_cache[which] = field_
        return self._posterior_cache[which]

    # -- logging ------------------------------------------------------------

    def _emit(self, event: str, **extra) -> None:
        s = self.state
        entry = {
            "t": s.clock_s,
            "event": event,
            "phase": s.phase.value,
            "lat": s.position.lat,
            "lon": s.position.lon,
        }
        entry.update(extra)
        self.log.append(entry)

    def _set_phase(self, phase: Phase) -> None:
        old = self.state.phase
        if (old, phase) not in LEGAL_TRANSITIONS:
            raise AssertionError(f"illegal phase transition {old.value} -> {phase.value}")
        self.state.phase = phase
        self.phases.append(phase.value)
        self._emit("phase", previous=old.value)

    # -- measurement --------------------------------------------------------

    def _measure(self) -> SampleRecord:
        s = self.state
        self._advance(self.config.sample_duration_s, "sample")
        power, quality = draw_bins(self.channel, s.position, self.config.n_bins, self.rng)
        return summarize_arrays(power, quality, s.position, s.clock_s)

    def _log_record(self, rec: SampleRecord) -> None:
        self.records.append(rec)
        self._emit(
            "sample",
            mean_power_db=rec.mean_power_db,
            quality_variance=rec.quality_variance,
            accepted=rec.accepted,
            threshold=self.state.filter.threshold,
            heading=self.config.heading,
        )

    def _accept(self, rec: SampleRecord) -> None:
        s = self.state
        est = self.config.estimator
        s.training = s.training.append(rec.location, rec.mean_power_db)
        s.schedule = s.schedule.advanced()
        s.fitted = gp.fit(
            s.training, s.params, est.bounds, est.mean_g, est.optimizer, est.n_restarts, self.rng
        )
        s.params = s.fitted.params
        self._posterior_cache.clear()
        self._emit("refit", n_train=len(s.training), lml=s.fitted.lml, **asdict(s.params))

    def _sample_here(self) -> SampleRecord:
        rec = self._measure()
        rec, self.state.filter = evaluate(rec, self.state.filter)
        self._log_record(rec)
        if rec.accepted:
            self._accept(rec)
        return rec

    def _travel_to(self, target: GeoPoint) -> None:
        s = self.state
        dist = self.frame.distance_m(s.position, target)
        self._advance(dist / self.config.cruise_speed_mps, "travel")
        s.position = target
        s.at_target = True
        self.trajectory.append((s.clock_s, target.lat, target.lon))
        self._emit("arrive", leg_m=dist)

    def _enter_aux(self, trigger: str) -> None:
        s = self.state
        s.aux_triggered_by = trigger
        s.recent_targets.clear()
        s.queue = make_aux_circle(s.position, self.config, self.config.flight_grid, s.position)
        s.at_target = False
        self._set_phase(Phase.AUX_CIRCLE)
        self.log[-1]["trigger"] = trigger

    # -- events -------------------------------------------------------------

    def step(self) -> MissionState:
        s = self.state
        cfg = self.config
        if s.phase is Phase.DONE:
            raise RuntimeError("mission already finished")
        if s.clock_s >= cfg.mission_duration_s:
            self._set_phase(Phase.DONE)
            return s

        if s.phase is Phase.TAKEOFF:
            self._advance(cfg.climb_time_s, "climb")
            self._emit("climb", altitude_m=cfg.altitude_m)
            self._set_phase(Phase.FIRST_SAMPLE)
        elif s.phase is Phase.FIRST_SAMPLE:
            self._first_sample()
        elif s.phase in (Phase.STARTUP_WAYPOINTS, Phase.AUX_CIRCLE):
            self._follow_queue()
        elif s.phase is Phase.AUTONOMOUS_BO:
            self._bo_event()
        return s

    def _first_sample(self) -> None:
        s = self.state
        fc = self.config.filter
        try:
            rec, s.filter, attempts = calibrate_first_sample(self._measure, s.filter, fc.max_retakes)
        except CalibrationFailedError as exc:
            s.filter = exc.state
            for r in exc.records:
                self._log_record(r)
            self._enter_aux(CALIBRATION_FAILED)
            return
        for r in attempts:
            self._log_record(r)
        self._accept(rec)
        s.queue = list(self.config.startup_waypoints)
        s.at_target = False
        self._set_phase(Phase.STARTUP_WAYPOINTS)

    def _follow_queue(self) -> None:
        s = self.state
        if not s.at_target:
            if s.queue:
                self._travel_to(s.queue.pop(0))
                return
        else:
            self._sample_here()
            s.at_target = False
            if s.queue:
                return
        # queue exhausted
        if s.phase is Phase.AUX_CIRCLE:
            s.filter = FilterState(s.filter.threshold, s.filter.escalation_factor, 0)
            s.aux_triggered_by = None
        self._set_phase(Phase.AUTONOMOUS_BO)

    def _bo_event(self) -> None:
        s = self.state
        if not s.at_target:
            target = acquisition.next_waypoint(self.posterior("flight"), s.schedule, self.config.flight_grid)
            s.recent_targets.append(target)
            self._emit("waypoint", target_lat=target.lat, target_lon=target.lon, beta=acquisition.beta(s.schedule))
            self._travel_to(target)
            return
        self._sample_here()
        s.at_target = False
        trigger = check_aux_triggers(s, self.config)
        if trigger is not None:
            self._enter_aux(trigger)

    # -- driver -------------------------------------------------------------

    def run(self) -> MissionReport:
        while self.state.phase is not Phase.DONE:
            self.step()
        return self.report()

    def report(self) -> MissionReport:
        s = self.state
        tx_frame = LocalFrame.at(self.channel.tx_location)
        errors = {t: tx_frame.distance_m(self.channel.tx_location, p) for t, p in s.estimates.items()}
        return MissionReport(
            estimates=dict(s.estimates),
            estimate_clock=dict(self.estimate_clock),
            errors_m=errors,
            hyperparams=s.fitted.params if s.fitted is not None else None,
            records=list(self.records),
            trajectory=list(self.trajectory),
            log=list(self.log),
            phases=list(self.phases),
            final_clock_s=s.clock_s,
            final_state=s,
        )


def run_mission(config: MissionConfig, channel: ChannelModel, seed: int) -> MissionReport:
    return Mission(config, channel, seed).run()
