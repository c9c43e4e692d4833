"""TOML run configuration with strict validation.

Every section maps onto one of the domain dataclasses. Unknown keys, wrong
types, and violated invariants raise :class:`ConfigError` with the dotted
path of the offending field (and line/column for TOML syntax errors).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .channel import MODEL_KINDS, ChannelModel
from .geo import GeoGrid, GeoPoint, InvalidBoundsError
from .kernels import HyperBounds, HyperParams
from .lbfgsb import OptOptions
from .mission import EstimatorConfig, FilterConfig, MissionConfig

PRESET_NAMES = ("trial1", "trial2", "trial3", "trial1_saturated")


class ConfigError(ValueError):
    pass


FIXED = "fixed"
UNIFORM = "uniform"


@dataclass(frozen=True)
class ChannelScenario:
    """Channel parameters plus a rule for placing the transmitter."""

    template: ChannelModel
    placement: str = FIXED

    def for_seed(self, rover_grid: GeoGrid, seed: int) -> ChannelModel:
        if self.placement == FIXED:
            return dataclasses.replace(self.template, rng_seed=seed)
        rng = np.random.default_rng([seed, 1])
        lat = rng.uniform(rover_grid.min_corner.lat, rover_grid.max_corner.lat)
        lon = rng.uniform(rover_grid.min_corner.lon, rover_grid.max_corner.lon)
        return dataclasses.replace(self.template, tx_location=GeoPoint(lat, lon), rng_seed=seed)


@dataclass(frozen=True)
class RunConfig:
    name: str
    mission: MissionConfig
    channel: ChannelScenario
    seed: int = 0
    output_dir: str = "runs"


# -- schema ------------------------------------------------------------------

_GRID_KEYS = {"min_lat": float, "min_lon": float, "max_lat": float, "max_lon": float, "rows": int, "cols": int}

_SCHEMA: dict[str, dict[str, Any]] = {
    "flight_grid": _GRID_KEYS,
    "rover_grid": _GRID_KEYS,
    "mission": {
        "takeoff": "point",
        "startup_waypoints": "points",
        "altitude_m": float,
        "climb_rate_mps": float,
        "cruise_speed_mps": float,
        "sample_duration_s": float,
        "bins_per_second": float,
        "mission_duration_s": float,
        "estimate_times_s": "floats",
        "similar_point_radius_m": float,
        "similar_point_count": int,
        "max_rejects": int,
        "aux_circle_radius_m": float,
        "aux_circle_points": int,
    },
    "kernel": {
        "scale_gamma2": float,
        "lengthscale_ell": float,
        "noise_level": float,
        "scale_gamma2_bounds": "pair",
        "lengthscale_ell_bounds": "pair",
        "noise_level_bounds": "pair",
        "mean_g": float,
    },
    "optimizer": {"memory": int, "gtol": float, "steptol": float, "max_iter": int, "restarts": int},
    "acquisition": {"ucb_decay": float},
    "filter": {"initial_threshold": float, "escalation_factor": float, "max_retakes": int},
    "channel": {
        "placement": str,
        "tx": "point",
        "model_kind": str,
        "tx_power_db": float,
        "pathloss_exponent": float,
        "sigma_spread": float,
        "shadowing_std": float,
        "noise_floor_db": float,
        "saturation_db": float,
        "fade_prob": float,
        "fade_depth_db": float,
    },
}
_TOP_LEVEL = {"name": str, "seed": int, "output_dir": str}
_REQUIRED = {
    "flight_grid": set(_GRID_KEYS),
    "rover_grid": set(_GRID_KEYS),
    "mission": {"takeoff", "startup_waypoints"},
}


def _check_value(path: str, value, kind):
    def number(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {v!r}")
        return float(v)

    if kind is float:
        return number(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if kind == "floats":
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list of numbers")
        return [number(v) for v in value]
    if kind == "pair":
        if not isinstance(value, list) or len(value) != 2:
            raise ConfigError(f"{path}: expected [lower, upper]")
        lo, hi = (number(v) for v in value)
        if not 0 < lo < hi:
            raise ConfigError(f"{path}: need 0 < lower < upper, got [{lo}, {hi}]")
        return (lo, hi)
    if kind == "point":
        if not isinstance(value, list) or len(value) != 2:
            raise ConfigError(f"{path}: expected [lat, lon]")
        try:
            return GeoPoint(number(value[0]), number(value[1]))
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if kind == "points":
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list of [lat, lon] pairs")
        return [_check_value(f"{path}[{i}]", v, "point") for i, v in enumerate(value)]
    raise AssertionError(kind)


def _validate_raw(raw: dict) -> dict:
    out: dict[str, Any] = {}
    for key, value in raw.items():
        if key in _TOP_LEVEL:
            out[key] = _check_value(key, value, _TOP_LEVEL[key])
        elif key in _SCHEMA:
            if not isinstance(value, dict):
                raise ConfigError(f"{key}: expected a table")
            section = {}
            for k, v in value.items():
                if k not in _SCHEMA[key]:
                    raise ConfigError(f"{key}.{k}: unknown key")
                section[k] = _check_value(f"{key}.{k}", v, _SCHEMA[key][k])
            out[key] = section
        else:
            raise ConfigError(f"{key}: unknown key")
    for section, keys in _REQUIRED.items():
        missing = keys - set(out.get(section, {}))
        for k in sorted(missing):
            raise ConfigError(f"{section}.{k}: required key missing")
    return out


def _grid(name: str, sec: dict) -> GeoGrid:
    try:
        return GeoGrid(
            GeoPoint(sec["min_lat"], sec["min_lon"]),
            GeoPoint(sec["max_lat"], sec["max_lon"]),
            sec["rows"],
            sec["cols"],
        )
    except (InvalidBoundsError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _build(raw: dict, name: str) -> RunConfig:
    cfg = _validate_raw(raw)
    flight = _grid("flight_grid", cfg["flight_grid"])
    rover = _grid("rover_grid", cfg["rover_grid"])

    ch = dict(cfg.get("channel", {}))
    placement = ch.pop("placement", FIXED)
    if placement not in (FIXED, UNIFORM):
        raise ConfigError(f"channel.placement: must be '{FIXED}' or '{UNIFORM}', got {placement!r}")
    tx = ch.pop("tx", None)
    if tx is None:
        if placement == FIXED:
            raise ConfigError("channel.tx: required when placement is 'fixed'")
        tx = rover.center()
    if ch.get("model_kind", MODEL_KINDS[0]) not in MODEL_KINDS:
        raise ConfigError(f"channel.model_kind: must be one of {MODEL_KINDS}")
    try:
        template = ChannelModel(tx_location=tx, **ch)
    except ValueError as exc:
        raise ConfigError(f"channel: {exc}") from None

    k = cfg.get("kernel", {})
    try:
        init = HyperParams(
            k.get("scale_gamma2", 1.0), k.get("lengthscale_ell", 0.00276), k.get("noise_level", 0.33)
        )
    except ValueError as exc:
        raise ConfigError(f"kernel: {exc}") from None
    bounds = HyperBounds(
        k.get("scale_gamma2_bounds", (1e-3, 1e3)),
        k.get("lengthscale_ell_bounds", (0.001, 0.004)),
        k.get("noise_level_bounds", (1e-4, 1e2)),
    )
    o = cfg.get("optimizer", {})
    if o.get("memory", 10) < 1:
        raise ConfigError("optimizer.memory: must be >= 1")
    if o.get("restarts", 2) < 0:
        raise ConfigError("optimizer.restarts: must be >= 0")
    opts = OptOptions(
        memory=o.get("memory", 10),
        gtol=o.get("gtol", 1e-5),
        steptol=o.get("steptol", 1e-9),
        max_iter=o.get("max_iter", 200),
    )
    decay = cfg.get("acquisition", {}).get("ucb_decay", 0.95)
    if not 0 < decay < 1:
        raise ConfigError(f"acquisition.ucb_decay: need 0 < d < 1, got {decay}")
    estimator = EstimatorConfig(
        init=init,
        bounds=bounds,
        mean_g=k.get("mean_g", template.noise_floor_db),
        optimizer=opts,
        n_restarts=o.get("restarts", 2),
        ucb_decay=decay,
    )

    f = cfg.get("filter", {})
    filt = FilterConfig(
        initial_threshold=f.get("initial_threshold", 35.0),
        escalation_factor=f.get("escalation_factor", 2.0),
        max_retakes=f.get("max_retakes", 10),
    )
    if filt.initial_threshold <= 0:
        raise ConfigError("filter.initial_threshold: must be positive")
    if filt.escalation_factor <= 1:
        raise ConfigError("filter.escalation_factor: must exceed 1")
    if filt.max_retakes < 0:
        raise ConfigError("filter.max_retakes: must be >= 0")

    m = dict(cfg["mission"])
    takeoff = m.pop("takeoff")
    startup = tuple(m.pop("startup_waypoints"))
    if "estimate_times_s" in m:
        m["estimate_times_s"] = tuple(m["estimate_times_s"])
    try:
        mission = MissionConfig(
            takeoff=takeoff,
            flight_grid=flight,
            rover_grid=rover,
            startup_waypoints=startup,
            estimator=estimator,
            filter=filt,
            **m,
        )
    except ValueError as exc:
        raise ConfigError(f"mission: {exc}") from None

    return RunConfig(
        name=cfg.get("name", name),
        mission=mission,
        channel=ChannelScenario(template, placement),
        seed=cfg.get("seed", 0),
        output_dir=cfg.get("output_dir", "runs"),
    )


def loads(text: str, name: str = "config") -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{name}: TOML syntax error: {exc}") from None
    return _build(raw, name)


def load(path) -> RunConfig:
    """Load a config file, or a bundled preset when ``path`` names one."""
    p = Path(path)
    if not p.exists() and str(path) in PRESET_NAMES:
        return load_preset(str(path))
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return loads(text, p.stem)


def preset_text(name: str) -> str:
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    return resources.files("radiobo.presets").joinpath(f"{name}.toml").read_text()


def load_preset(name: str) -> RunConfig:
    return loads(preset_text(name), name)
