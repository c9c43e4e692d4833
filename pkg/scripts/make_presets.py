"""Regenerate the bundled scenario presets in src/radiobo/presets/.

All geometry is laid out in meters around the takeoff point and converted to
lat/lon with the package's local frame, so the TOML files stay readable while
the layout stays easy to reason about:

* flight area 600 m x 500 m, rover area 500 m x 160 m (~19.77 acres)
* transmitters 125 m, 330 m and 286 m from takeoff
* startup triangle with 100-150 m legs
"""

from __future__ import annotations

import math
from pathlib import Path

from radiobo.geo import GeoPoint, LocalFrame, local_to_geo

TAKEOFF = GeoPoint(35.7275, -78.6960)
FRAME = LocalFrame.at(TAKEOFF)

FLIGHT = ((-100.0, -100.0), (500.0, 400.0))
ROVER = ((-50.0, 90.0), (450.0, 250.0))
STARTUP = [(120.0, 0.0), (60.0, 110.0), (-40.0, 60.0)]

TRIALS = {
    # name: (tx east/north offset in m, shadowing std dB, per-bin fade probability, saturation dB)
    "trial1": ((75.0, 100.0), 1.5, 0.002, -25.0),
    "trial2": ((300.0, 137.5), 2.0, 0.004, -25.0),
    "trial3": ((200.0, 204.4), 2.5, 0.006, -25.0),
    # trial1 geometry with a receiver that clips ~80 m around the transmitter
    "trial1_saturated": ((75.0, 100.0), 1.5, 0.002, -72.0),
}

OUT = Path(__file__).resolve().parents[1] / "src" / "radiobo" / "presets"


def geo(e, n):
    p = local_to_geo(FRAME, e, n)
    return f"[{p.lat:.7f}, {p.lon:.7f}]"


def grid_block(name, box, rows=64, cols=64):
    (e0, n0), (e1, n1) = box
    lo = local_to_geo(FRAME, e0, n0)
    hi = local_to_geo(FRAME, e1, n1)
    return (
        f"[{name}]\n"
        f"min_lat = {lo.lat:.7f}\nmin_lon = {lo.lon:.7f}\n"
        f"max_lat = {hi.lat:.7f}\nmax_lon = {hi.lon:.7f}\n"
        f"rows = {rows}\ncols = {cols}\n"
    )


def render(name, tx, shadowing, fade_prob, saturation):
    dist = math.hypot(*tx)
    waypoints = ", ".join(geo(*w) for w in STARTUP)
    return f"""# Scenario preset {name}: transmitter {dist:.0f} m from takeoff.
# Generated by scripts/make_presets.py; edit that script rather than this file.
name = "{name}"
seed = 0
output_dir = "runs/{name}"

{grid_block("flight_grid", FLIGHT)}
{grid_block("rover_grid", ROVER)}
[mission]
takeoff = {geo(0.0, 0.0)}
startup_waypoints = [{waypoints}]
altitude_m = 40.0
climb_rate_mps = 1.0
cruise_speed_mps = 10.0
sample_duration_s = 6.0
bins_per_second = 10.0
mission_duration_s = 600.0
estimate_times_s = [180.0, 600.0]
similar_point_radius_m = 20.0
similar_point_count = 5
max_rejects = 8
aux_circle_radius_m = 60.0
aux_circle_points = 8

[kernel]
scale_gamma2 = 1.0
lengthscale_ell = 0.00276
noise_level = 0.33
scale_gamma2_bounds = [1e-3, 1e3]
lengthscale_ell_bounds = [0.001, 0.004]
noise_level_bounds = [1e-4, 1e2]
mean_g = -85.0

[optimizer]
memory = 10
gtol = 1e-5
steptol = 1e-9
max_iter = 200
restarts = 2

[acquisition]
ucb_decay = 0.95

[filter]
initial_threshold = 35.0
escalation_factor = 2.0
max_retakes = 10

[channel]
placement = "fixed"
tx = {geo(*tx)}
model_kind = "log-distance"
tx_power_db = -30.0
pathloss_exponent = 2.2
sigma_spread = 0.0015
shadowing_std = {shadowing}
noise_floor_db = -85.0
saturation_db = {saturation}
fade_prob = {fade_prob}
fade_depth_db = 30.0
"""


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "__init__.py").touch()
    for name, args in TRIALS.items():
        (OUT / f"{name}.toml").write_text(render(name, *args))
        print("wrote", OUT / f"{name}.toml")


if __name__ == "__main__":
    main()
