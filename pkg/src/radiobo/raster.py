"""CSV rasters of grid fields and their rendering to binary PGM/PPM images.

Raster layout: two ``#`` header lines (format tag, then grid bounds and
shape), followed by one line per grid row from south (row 0) to north, each
with ``cols`` comma-separated values written with ``repr`` so they parse back
exactly. Images are drawn north-up, so image row ``i`` shows raster row
``rows - 1 - i``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .geo import GeoGrid, GeoPoint

MAGIC = "# radiobo-raster v1"
MAXVAL = 255
MARKER_COLORS = {"truth": (255, 0, 0), "estimate": (0, 200, 0), "early": (0, 80, 255)}


class RasterError(ValueError):
    pass


def write_raster(path, grid: GeoGrid, values: np.ndarray, quantity: str = "value") -> None:
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise ValueError(f"values shape {values.shape} does not match grid {grid.shape}")
    lines = [
        MAGIC,
        "# min_lat={!r},min_lon={!r},max_lat={!r},max_lon={!r},rows={},cols={},quantity={}".format(
            grid.min_corner.lat,
            grid.min_corner.lon,
            grid.max_corner.lat,
            grid.max_corner.lon,
            grid.rows,
            grid.cols,
            quantity,
        ),
    ]
    lines += [",".join(repr(float(v)) for v in row) for row in values]
    Path(path).write_text("\n".join(lines) + "\n")


def read_raster(path) -> tuple[GeoGrid, np.ndarray, str]:
    lines = Path(path).read_text().splitlines()
    if len(lines) < 2 or lines[0] != MAGIC:
        raise RasterError(f"{path}: not a radiobo raster")
    meta = dict(kv.split("=", 1) for kv in lines[1].lstrip("# ").split(","))
    grid = GeoGrid(
        GeoPoint(float(meta["min_lat"]), float(meta["min_lon"])),
        GeoPoint(float(meta["max_lat"]), float(meta["max_lon"])),
        int(meta["rows"]),
        int(meta["cols"]),
    )
    rows = [[float(v) for v in line.split(",")] for line in lines[2:] if line]
    values = np.array(rows)
    if values.shape != grid.shape:
        raise RasterError(f"{path}: expected {grid.shape} values, found {values.shape}")
    return grid, values, meta.get("quantity", "value")


def to_gray(values: np.ndarray) -> np.ndarray:
    """Linear min->0, max->255 map; only exact maxima reach 255."""
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        r, c = bad[0]
        raise RasterError(f"non-finite raster value at node (row={r}, col={c})")
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.full(values.shape, MAXVAL // 2, dtype=np.uint8)
    scaled = np.floor((values - lo) / (hi - lo) * MAXVAL)
    scaled = np.minimum(scaled, MAXVAL - 1)
    scaled[values == hi] = MAXVAL
    return scaled.astype(np.uint8)


def _node_of(grid: GeoGrid, p: GeoPoint) -> tuple[int, int]:
    r = int(np.argmin(np.abs(grid.lats - p.lat)))
    c = int(np.argmin(np.abs(grid.lons - p.lon)))
    return r, c


def render_heatmap(raster_path, output_path, markers: dict[str, GeoPoint] | None = None) -> Path:
    """Render a raster as binary PGM, or PPM when location markers are given."""
    grid, values, _ = read_raster(raster_path)
    gray = to_gray(values)[::-1]  # north up
    out = Path(output_path)
    h, w = gray.shape
    if not markers:
        out.write_bytes(f"P5\n{w} {h}\n{MAXVAL}\n".encode() + gray.tobytes())
        return out
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    for label, p in markers.items():
        r, c = _node_of(grid, p)
        rgb[h - 1 - r, c] = MARKER_COLORS.get(label, (255, 255, 0))
    out.write_bytes(f"P6\n{w} {h}\n{MAXVAL}\n".encode() + rgb.tobytes())
    return out


def read_pnm(path) -> np.ndarray:
    """Read a binary PGM (h, w) or PPM (h, w, 3) written by :func:`render_heatmap`."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    magic, dims, maxval, body = parts
    w, h = (int(v) for v in dims.split())
    if int(maxval) != MAXVAL:
        raise RasterError(f"{path}: unsupported maxval {maxval!r}")
    if magic == b"P5":
        return np.frombuffer(body, dtype=np.uint8).reshape(h, w)
    if magic == b"P6":
        return np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3)
    raise RasterError(f"{path}: unsupported image type {magic!r}")


def pixel_argmax(image: np.ndarray) -> tuple[int, int]:
    """Raster (row, col) of the brightest pixel, lowest raster index on ties."""
    idx = int(np.argmax(image[::-1]))
    return divmod(idx, image.shape[1])
