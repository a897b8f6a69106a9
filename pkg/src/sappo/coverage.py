"""Grid-sampled coverage: where can the robot range enough beacons?"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import GeometryError, wrap_angle

DEFAULT_CELL = 0.05


class BeaconSector(NamedTuple):
    x: float
    y: float
    heading: float
    arc: float
    range: float


@dataclass
class CoverageGrid:
    origin: tuple
    cell_size: float
    counts: np.ndarray  # beacons seen from each cell centre, rows along y
    inside: np.ndarray
    min_beacons: int

    @property
    def covered(self):
        return self.inside & (self.counts >= self.min_beacons)

    def with_min(self, min_beacons):
        return CoverageGrid(self.origin, self.cell_size, self.counts, self.inside, min_beacons)

    def to_pgm(self):
        """Binary PGM, one byte per cell: 0 uncovered, 128 + k when k beacons cover it."""
        img = np.where(self.covered, np.minimum(128 + self.counts, 255), 0).astype(np.uint8)
        img = img[::-1]  # top image row is the largest y
        rows, cols = img.shape
        return f"P5\n{cols} {rows}\n255\n".encode("ascii") + img.tobytes()


def cell_centres(room, cell_size):
    x0, y0, x1, y1 = room.bounds
    cols = max(1, math.ceil((x1 - x0) / cell_size - 1e-9))
    rows = max(1, math.ceil((y1 - y0) / cell_size - 1e-9))
    xs = x0 + (np.arange(cols) + 0.5) * cell_size
    ys = y0 + (np.arange(rows) + 0.5) * cell_size
    gx, gy = np.meshgrid(xs, ys)
    return (x0, y0), gx, gy


def sector_hits(beacon, pts, room=None):
    """Boolean mask of points inside the beacon's range and arc with a clear line of sight."""
    d = pts - np.array([beacon.x, beacon.y])
    dist = np.hypot(d[:, 0], d[:, 1])
    hit = dist <= beacon.range
    if beacon.arc < 2.0 * math.pi - 1e-12:
        off = np.abs(wrap_angle(np.arctan2(d[:, 1], d[:, 0]) - beacon.heading))
        hit &= (off <= beacon.arc / 2.0 + 1e-12) | (dist < 1e-12)
    if room is not None and hit.any():
        idx = np.flatnonzero(hit)
        hit[idx[room.blocked_many((beacon.x, beacon.y), pts[idx])]] = False
    return hit


def coverage_map(room, beacons, min_beacons=2, cell_size=DEFAULT_CELL):
    if cell_size <= 0:
        raise GeometryError("cell_size must be positive")
    if min_beacons < 0:
        raise GeometryError("min_beacons must be >= 0")
    if room is None:
        raise GeometryError("coverage needs a room")
    origin, gx, gy = cell_centres(room, cell_size)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    inside = room.contains(pts)
    counts = np.zeros(len(pts), dtype=np.int32)
    for b in beacons:
        counts += sector_hits(b, pts, room)
    shape = gx.shape
    return CoverageGrid(origin, cell_size, counts.reshape(shape), inside.reshape(shape), min_beacons)


def covered_area(grid):
    return float(np.count_nonzero(grid.covered)) * grid.cell_size ** 2


def summary_rows(room, beacons, cell_size=DEFAULT_CELL, levels=(1, 2, 3)):
    """``(min_beacons, covered_m2, room_m2)`` for each requested level."""
    grid = coverage_map(room, beacons, levels[0], cell_size)
    return [(k, covered_area(grid.with_min(k)), room.area) for k in levels], grid
