import numpy as np
import pytest
from hypothesis import settings

from radiobo.geo import GeoPoint, LocalFrame, local_to_geo, make_grid
from radiobo.mission import EstimatorConfig, MissionConfig

settings.register_profile("default", deadline=None, max_examples=50)
settings.register_profile("fast", deadline=None, max_examples=10)
settings.load_profile("default")

# (criterion, passed, detail) rows filled in by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


TAKEOFF = GeoPoint(35.7275, -78.6960)


def offset(e, n, origin=TAKEOFF):
    return local_to_geo(LocalFrame.at(origin), e, n)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_config():
    """Preset-like layout on coarse 16x16 grids, for fast mission tests."""
    flight = make_grid(offset(-100, -100), offset(500, 400), 16, 16)
    rover = make_grid(offset(-50, 90), offset(450, 250), 16, 16)
    return MissionConfig(
        takeoff=TAKEOFF,
        flight_grid=flight,
        rover_grid=rover,
        startup_waypoints=(offset(120, 0), offset(60, 110), offset(-40, 60)),
        mission_duration_s=300.0,
        estimate_times_s=(180.0, 300.0),
        estimator=EstimatorConfig(n_restarts=0),
    )
