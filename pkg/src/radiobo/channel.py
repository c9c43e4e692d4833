"""Synthetic narrowband channel: pathloss, per-bin shadowing, deep fades, clipping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geo import GeoPoint, LocalFrame, as_coords

LOG_DISTANCE = "log-distance"
GAUSSIAN_2D = "gaussian-2d"
MODEL_KINDS = (LOG_DISTANCE, GAUSSIAN_2D)


@dataclass(frozen=True)
class ChannelModel:
    tx_location: GeoPoint
    model_kind: str = GAUSSIAN_2D
    tx_power_db: float = -45.0
    pathloss_exponent: float = 2.0
    sigma_spread: float = 0.002  # degrees, gaussian-2d only
    shadowing_std: float = 1.0
    noise_floor_db: float = -85.0
    saturation_db: float = -30.0
    fade_prob: float = 0.0
    fade_depth_db: float = 30.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"model_kind must be one of {MODEL_KINDS}, got {self.model_kind!r}")
        if not self.noise_floor_db < self.saturation_db:
            raise ValueError("noise_floor_db must be below saturation_db")
        if not 0.0 <= self.fade_prob <= 1.0:
            raise ValueError("fade_prob must lie in [0, 1]")
        if self.pathloss_exponent <= 0:
            raise ValueError("pathloss_exponent must be positive")
        if self.sigma_spread <= 0:
            raise ValueError("sigma_spread must be positive")
        if self.shadowing_std < 0 or self.fade_depth_db < 0:
            raise ValueError("shadowing_std and fade_depth_db must be non-negative")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.rng_seed)


@dataclass(frozen=True)
class BinReading:
    power_db: float
    quality: float


def field_values(model: ChannelModel, coords) -> np.ndarray:
    """Noise-free received power (dB) at each [lat, lon] row."""
    X = as_coords(coords)
    tx = model.tx_location
    if model.model_kind == LOG_DISTANCE:
        en = LocalFrame.at(tx).to_local(X)
        dist = np.maximum(np.hypot(en[:, 0], en[:, 1]), 1.0)
        p = model.tx_power_db - 10.0 * model.pathloss_exponent * np.log10(dist)
        p = np.maximum(p, model.noise_floor_db)
    else:
        d2 = (X[:, 0] - tx.lat) ** 2 + (X[:, 1] - tx.lon) ** 2
        p = model.noise_floor_db + (model.tx_power_db - model.noise_floor_db) * np.exp(
            -d2 / (2.0 * model.sigma_spread**2)
        )
    return np.minimum(p, model.saturation_db)


def true_field(model: ChannelModel, x: GeoPoint) -> float:
    return float(field_values(model, x)[0])


def quality_of(model: ChannelModel, power_db) -> np.ndarray:
    """Normalized excess power over the noise floor, clamped to [0, 1]."""
    span = model.saturation_db - model.noise_floor_db
    return np.clip((np.asarray(power_db, dtype=float) - model.noise_floor_db) / span, 0.0, 1.0)


def draw_bins(model: ChannelModel, x: GeoPoint, n_bins: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Array form of :func:`sample_bins`: (power_db, quality) per bin."""
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    base = true_field(model, x)
    shadow = rng.normal(0.0, 1.0, n_bins) * model.shadowing_std
    fades = rng.random(n_bins) < model.fade_prob
    power = base + shadow - model.fade_depth_db * fades
    return power, quality_of(model, power)


def sample_bins(model: ChannelModel, x: GeoPoint, n_bins: int, rng: np.random.Generator) -> list[BinReading]:
    power, quality = draw_bins(model, x, n_bins, rng)
    return [BinReading(float(p), float(q)) for p, q in zip(power, quality)]
