"""UCB acquisition with a geometrically decaying exploration weight."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geo import GeoGrid, GeoPoint
from .gp import PosteriorField, argmax_node


@dataclass(frozen=True)
class UcbSchedule:
    d: float = 0.95
    sample_count_s: int = 0

    def __post_init__(self):
        if not (0.0 < self.d < 1.0):
            raise ValueError(f"decay base must satisfy 0 < d < 1, got {self.d}")
        if self.sample_count_s < 0:
            raise ValueError("sample count must be non-negative")

    def advanced(self, k: int = 1) -> "UcbSchedule":
        return replace(self, sample_count_s=self.sample_count_s + k)


def beta(schedule: UcbSchedule) -> float:
    return schedule.d**schedule.sample_count_s


def ucb_field(field: PosteriorField, beta: float) -> np.ndarray:
    if beta < 0:
        raise ValueError("beta must be non-negative")
    return field.mean + beta * field.std


def next_waypoint(field: PosteriorField, schedule: UcbSchedule, flight_grid: GeoGrid) -> GeoPoint:
    """Flight-grid node maximizing the UCB score; ties go to the lowest (row, col)."""
    if field.grid != flight_grid:
        raise ValueError("posterior field must be evaluated on the flight grid")
    r, c = argmax_node(ucb_field(field, beta(schedule)))
    return flight_grid.node(r, c)
