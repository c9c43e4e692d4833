"""Lat/lon rectangles, their discretization into grids, and a small-area local frame.

Coordinates are kept in degrees everywhere except where a metric distance is
needed (travel time, localization error). The local frame is an
equirectangular projection, which is accurate to well under a centimetre for
the sub-kilometre areas simulated here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

# WGS-84 mean length of one degree of meridian arc (quarter meridian / 90).
METERS_PER_DEG_LAT = 111_132.954

__all__ = [
    "METERS_PER_DEG_LAT",
    "GeoPoint",
    "GeoGrid",
    "LocalFrame",
    "InvalidBoundsError",
    "OutOfFrameError",
    "make_grid",
    "geo_to_local",
    "local_to_geo",
    "contains",
    "clamp_to_grid",
    "as_coords",
]


class InvalidBoundsError(ValueError):
    pass


class OutOfFrameError(ValueError):
    pass


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0) or not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"coordinates out of range: ({self.lat}, {self.lon})")

    def as_array(self) -> np.ndarray:
        return np.array([self.lat, self.lon])


def as_coords(points) -> np.ndarray:
    """Return an (n, 2) float array of [lat, lon] rows.

    Accepts a sequence of GeoPoints, a single GeoPoint, or anything numpy can
    view as (n, 2).
    """
    if isinstance(points, GeoPoint):
        return points.as_array()[None, :]
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float)
    else:
        pts = list(points)
        if pts and isinstance(pts[0], GeoPoint):
            arr = np.array([[p.lat, p.lon] for p in pts], dtype=float)
        else:
            arr = np.asarray(pts, dtype=float)
    return arr.reshape(-1, 2)


@dataclass(frozen=True)
class GeoGrid:
    """Axis-aligned lat/lon rectangle sampled at ``rows`` x ``cols`` nodes.

    Row index runs south to north, column index west to east, so node
    ``(r, c)`` is ``(lats[r], lons[c])``.
    """

    min_corner: GeoPoint
    max_corner: GeoPoint
    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 2 or self.cols < 2:
            raise InvalidBoundsError(f"grid needs at least 2x2 nodes, got {self.rows}x{self.cols}")
        if not (self.min_corner.lat < self.max_corner.lat and self.min_corner.lon < self.max_corner.lon):
            raise InvalidBoundsError(
                f"min corner {self.min_corner} must lie strictly southwest of {self.max_corner}"
            )

    @cached_property
    def lats(self) -> np.ndarray:
        return np.linspace(self.min_corner.lat, self.max_corner.lat, self.rows)

    @cached_property
    def lons(self) -> np.ndarray:
        return np.linspace(self.min_corner.lon, self.max_corner.lon, self.cols)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @cached_property
    def coords(self) -> np.ndarray:
        """All nodes as an (rows*cols, 2) array in row-major order."""
        lat, lon = np.meshgrid(self.lats, self.lons, indexing="ij")
        out = np.column_stack([lat.ravel(), lon.ravel()])
        out.setflags(write=False)
        return out

    def node(self, row: int, col: int) -> GeoPoint:
        return GeoPoint(float(self.lats[row]), float(self.lons[col]))

    def center(self) -> GeoPoint:
        return GeoPoint(
            0.5 * (self.min_corner.lat + self.max_corner.lat),
            0.5 * (self.min_corner.lon + self.max_corner.lon),
        )

    def extent_m(self) -> tuple[float, float]:
        """(east-west, north-south) size in meters using a frame at the center."""
        frame = LocalFrame.at(self.center())
        width = (self.max_corner.lon - self.min_corner.lon) * frame.meters_per_deg_lon
        height = (self.max_corner.lat - self.min_corner.lat) * frame.meters_per_deg_lat
        return width, height

    def area_m2(self) -> float:
        w, h = self.extent_m()
        return w * h


def make_grid(min_corner: GeoPoint, max_corner: GeoPoint, rows: int, cols: int) -> GeoGrid:
    return GeoGrid(min_corner, max_corner, int(rows), int(cols))


@dataclass(frozen=True)
class LocalFrame:
    origin: GeoPoint
    meters_per_deg_lat: float = METERS_PER_DEG_LAT
    meters_per_deg_lon: float = field(default=float("nan"))

    def __post_init__(self):
        if math.isnan(self.meters_per_deg_lon):
            scale = self.meters_per_deg_lat * math.cos(math.radians(self.origin.lat))
            object.__setattr__(self, "meters_per_deg_lon", scale)
        if self.meters_per_deg_lat <= 0 or self.meters_per_deg_lon <= 0:
            raise ValueError("frame scales must be positive")

    @classmethod
    def at(cls, origin: GeoPoint) -> "LocalFrame":
        return cls(origin)

    def to_local(self, coords: np.ndarray) -> np.ndarray:
        """Vectorized projection of (n, 2) [lat, lon] rows to (n, 2) [east, north]."""
        c = np.asarray(coords, dtype=float).reshape(-1, 2)
        east = (c[:, 1] - self.origin.lon) * self.meters_per_deg_lon
        north = (c[:, 0] - self.origin.lat) * self.meters_per_deg_lat
        return np.column_stack([east, north])

    def to_geo(self, en: np.ndarray) -> np.ndarray:
        e = np.asarray(en, dtype=float).reshape(-1, 2)
        lat = self.origin.lat + e[:, 1] / self.meters_per_deg_lat
        lon = self.origin.lon + e[:, 0] / self.meters_per_deg_lon
        return np.column_stack([lat, lon])

    def distance_m(self, a: GeoPoint, b: GeoPoint) -> float:
        ea, na = geo_to_local(self, a)
        eb, nb = geo_to_local(self, b)
        return math.hypot(ea - eb, na - nb)


def geo_to_local(frame: LocalFrame, p: GeoPoint) -> tuple[float, float]:
    dlat = p.lat - frame.origin.lat
    dlon = p.lon - frame.origin.lon
    if abs(dlat) > 1.0 or abs(dlon) > 1.0:
        raise OutOfFrameError(f"{p} is more than 1 degree from frame origin {frame.origin}")
    return dlon * frame.meters_per_deg_lon, dlat * frame.meters_per_deg_lat


def local_to_geo(frame: LocalFrame, east: float, north: float) -> GeoPoint:
    lat = frame.origin.lat + north / frame.meters_per_deg_lat
    lon = frame.origin.lon + east / frame.meters_per_deg_lon
    if abs(lat - frame.origin.lat) > 1.0 or abs(lon - frame.origin.lon) > 1.0:
        raise OutOfFrameError(f"offset ({east}, {north}) m leaves the small-area frame")
    return GeoPoint(lat, lon)


def contains(grid: GeoGrid, p: GeoPoint) -> bool:
    return (
        grid.min_corner.lat <= p.lat <= grid.max_corner.lat
        and grid.min_corner.lon <= p.lon <= grid.max_corner.lon
    )


def clamp_to_grid(grid: GeoGrid, p: GeoPoint) -> GeoPoint:
    lat = min(max(p.lat, grid.min_corner.lat), grid.max_corner.lat)
    lon = min(max(p.lon, grid.min_corner.lon), grid.max_corner.lon)
    if lat == p.lat and lon == p.lon:
        return p
    return GeoPoint(lat, lon)
