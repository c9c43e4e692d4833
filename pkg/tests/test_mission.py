import dataclasses
import math
from collections import deque

import numpy as np
import pytest
from conftest import TAKEOFF, offset
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from traces import check_trace, run_trace

from radiobo import gp
from radiobo.acquisition import UcbSchedule
from radiobo.channel import ChannelModel
from radiobo.geo import GeoPoint, LocalFrame, contains, local_to_geo
from radiobo.gp import TrainingSet
from radiobo.mission import (
    CALIBRATION_FAILED,
    MAX_REJECTS,
    SIMILAR_POINTS,
    FilterConfig,
    Mission,
    MissionState,
    Phase,
    check_aux_triggers,
    make_aux_circle,
    run_mission,
)
from radiobo.sample_filter import FilterState


def channel(**kw):
    base = dict(tx_location=offset(75, 100), model_kind="log-distance", tx_power_db=-30.0, pathloss_exponent=2.2,
                saturation_db=-25.0, shadowing_std=1.5, fade_prob=0.002)
    base.update(kw)
    return ChannelModel(**base)


def state_with(targets, rejected, config):
    return MissionState(
        phase=Phase.AUTONOMOUS_BO,
        clock_s=0.0,
        position=TAKEOFF,
        training=TrainingSet.empty(),
        filter=FilterState(35.0, 2.0, rejected),
        schedule=UcbSchedule(),
        recent_targets=deque(targets, maxlen=config.similar_point_count),
    )


# -- triggers ---------------------------------------------------------------


def test_similar_points_trigger(small_config):
    frame = LocalFrame.at(offset(100, 100))
    targets = [local_to_geo(frame, 10 * math.cos(a), 10 * math.sin(a)) for a in np.linspace(0, 4, 5)]
    assert check_aux_triggers(state_with(targets, 0, small_config), small_config) == SIMILAR_POINTS


def test_similar_points_needs_full_buffer(small_config):
    targets = [offset(100, 100)] * 4
    assert check_aux_triggers(state_with(targets, 0, small_config), small_config) is None


def test_max_rejects_trigger(small_config):
    assert check_aux_triggers(state_with([], 8, small_config), small_config) == MAX_REJECTS
    assert check_aux_triggers(state_with([], 7, small_config), small_config) is None


def test_similar_points_checked_first(small_config):
    targets = [offset(100, 100)] * 5
    assert check_aux_triggers(state_with(targets, 8, small_config), small_config) == SIMILAR_POINTS


def test_dispersed_targets_no_trigger(small_config):
    targets = [offset(60 * k, 0) for k in range(5)]
    assert check_aux_triggers(state_with(targets, 2, small_config), small_config) is None


# -- aux circle -------------------------------------------------------------


def test_aux_circle_on_radius(small_config):
    cfg = dataclasses.replace(small_config, aux_circle_radius_m=50.0)
    center = offset(200, 150)
    pts = make_aux_circle(center, cfg, cfg.flight_grid)
    frame = LocalFrame.at(center)
    assert len(pts) == 8
    for p in pts:
        assert frame.distance_m(center, p) == pytest.approx(50.0, rel=1e-9)
    gaps = [frame.distance_m(a, b) for a, b in zip(pts, pts[1:] + pts[:1])]
    assert gaps == pytest.approx([2 * 50 * math.sin(math.pi / 8)] * 8, rel=1e-9)
    assert gaps[0] == pytest.approx(38.27, abs=0.01)


def test_aux_circle_starts_nearest_and_turns_counter_clockwise(small_config):
    center = offset(200, 150)
    here = offset(200, 100)  # due south of the center
    pts = make_aux_circle(center, small_config, small_config.flight_grid, here)
    frame = LocalFrame.at(center)
    angles = [math.atan2(*frame.to_local(p.as_array()[None])[0][::-1]) for p in pts]
    assert angles[0] == pytest.approx(-math.pi / 2, abs=1e-6)
    steps = np.mod(np.diff(angles), 2 * math.pi)
    assert steps == pytest.approx([math.pi / 4] * 7, abs=1e-6)


@settings(suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(corner=st.sampled_from(["sw", "se", "nw", "ne"]), radius=st.floats(1, 500))
def test_aux_circle_clamped_at_corners(corner, radius, small_config):
    g = small_config.flight_grid
    lat = g.min_corner.lat if corner[0] == "s" else g.max_corner.lat
    lon = g.min_corner.lon if corner[1] == "w" else g.max_corner.lon
    cfg = dataclasses.replace(small_config, aux_circle_radius_m=radius)
    for p in make_aux_circle(GeoPoint(lat, lon), cfg, g):
        assert contains(g, p)


# -- stepping ---------------------------------------------------------------


def test_first_transition(small_config):
    m = Mission(small_config, channel(), seed=0)
    m.step()
    assert m.state.phase is Phase.FIRST_SAMPLE
    assert m.state.clock_s == 40.0
    assert m.state.position == TAKEOFF


def test_startup_waypoints_then_bo(small_config):
    m = Mission(small_config, channel(), seed=0)
    m.step()
    m.step()
    assert m.state.phase is Phase.STARTUP_WAYPOINTS
    visited = []
    while m.state.phase is Phase.STARTUP_WAYPOINTS:
        m.step()
        visited.append(m.state.position)
    assert m.state.phase is Phase.AUTONOMOUS_BO
    assert [p for p in dict.fromkeys(visited)] == list(small_config.startup_waypoints)
    assert [e["event"] for e in m.log].count("sample") >= 4


def test_calibration_failure_falls_back_to_circle(small_config):
    cfg = dataclasses.replace(small_config, filter=FilterConfig(35.0, 2.0, max_retakes=0))
    m = Mission(cfg, channel(shadowing_std=0.0, fade_prob=0.5), seed=3)
    m.step()
    m.step()
    assert m.state.phase is Phase.AUX_CIRCLE
    assert m.state.aux_triggered_by == CALIBRATION_FAILED
    assert len(m.state.training) == 0
    rep = m.run()
    assert rep.phases[-1] == Phase.DONE.value
    assert check_trace(m) == []


def test_rejected_count_resets_after_circle(small_config):
    cfg = dataclasses.replace(small_config, max_rejects=1, mission_duration_s=300.0)
    m = Mission(cfg, channel(fade_prob=0.05), seed=1)
    saw_circle_end = False
    while m.state.phase is not Phase.DONE:
        before = m.state.phase
        m.step()
        if before is Phase.AUX_CIRCLE and m.state.phase is Phase.AUTONOMOUS_BO:
            assert m.state.filter.rejected_count == 0
            assert m.state.aux_triggered_by is None
            saw_circle_end = True
    assert saw_circle_end


def test_ring_buffer_cleared_on_entering_circle(small_config):
    cfg = dataclasses.replace(small_config, max_rejects=1)
    m = Mission(cfg, channel(fade_prob=0.05), seed=1)
    while m.state.phase is not Phase.DONE:
        before = m.state.phase
        m.step()
        if before is Phase.AUTONOMOUS_BO and m.state.phase is Phase.AUX_CIRCLE:
            assert len(m.state.recent_targets) == 0
            return
    pytest.fail("no aux circle was entered")


def test_estimate_taken_mid_leg_uses_gp_state_at_crossing(small_config):
    # 160 s falls inside a travel leg for this seed; no sample is taken for the estimate
    cfg = dataclasses.replace(small_config, estimate_times_s=(160.0, 300.0))
    m = Mission(cfg, channel(), seed=2)
    while 160.0 not in m.state.estimates:
        expected = m.posterior("rover")
        n_samples = len(m.records)
        m.step()
    assert m.log[-1]["event"] == "arrive" and m.log[-2]["event"] == "estimate"
    assert len(m.records) == n_samples
    assert m.state.estimates[160.0] == gp.argmax_mean(expected)
    assert m.estimate_clock[160.0] >= 160.0


def test_estimate_before_first_fit_uses_prior(small_config):
    cfg = dataclasses.replace(small_config, estimate_times_s=(41.0, 300.0))
    rep = run_mission(cfg, channel(), seed=0)
    assert rep.estimates[41.0] == cfg.rover_grid.node(0, 0)
    assert rep.estimate_clock[41.0] == 46.0


def test_zero_duration_run(small_config):
    cfg = dataclasses.replace(small_config, mission_duration_s=0.0, estimate_times_s=(0.0,))
    rep = run_mission(cfg, channel(), seed=0)
    assert rep.phases == ["Takeoff", "Done"]
    assert rep.estimates == {0.0: cfg.rover_grid.node(0, 0)}
    assert rep.final_clock_s == 0.0
    assert rep.hyperparams is None


def test_determinism(small_config):
    a = run_mission(small_config, channel(), seed=5)
    b = run_mission(small_config, channel(), seed=5)
    c = run_mission(small_config, channel(), seed=6)
    assert a.to_json() == b.to_json()
    assert a.log == b.log
    assert a.to_json() != c.to_json()


def test_full_run_invariants(small_config):
    m = Mission(small_config, channel(), seed=4)
    rep = m.run()
    assert check_trace(m) == []
    assert set(rep.estimates) == {180.0, 300.0}
    assert rep.final_clock_s >= small_config.mission_duration_s
    assert rep.errors_m[300.0] == pytest.approx(
        LocalFrame.at(m.channel.tx_location).distance_m(m.channel.tx_location, rep.estimates[300.0])
    )


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_random_traces_respect_invariants(seed):
    assert check_trace(run_trace(seed)) == []


def test_finished_mission_cannot_step(small_config):
    cfg = dataclasses.replace(small_config, mission_duration_s=0.0, estimate_times_s=())
    m = Mission(cfg, channel(), 0)
    m.run()
    with pytest.raises(RuntimeError):
        m.step()


@pytest.mark.parametrize(
    "change",
    [
        dict(estimate_times_s=(300.0, 180.0)),
        dict(estimate_times_s=(400.0,)),
        dict(startup_waypoints=(offset(2000, 0),)),
        dict(cruise_speed_mps=0.0),
        dict(sample_duration_s=0.1),
    ],
)
def test_config_validation(small_config, change):
    with pytest.raises(ValueError):
        dataclasses.replace(small_config, **change)
