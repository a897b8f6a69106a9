"""Polygonal transducer arrays and the apothem-corrected distance model.

Both the robot's emitter ring and the beacons' receiver arrays are regular
polygons with transducers on the sides.  A transducer-to-transducer range is
turned into a centre-to-centre range by adding the two effective apothems;
whatever angle the two apothems make with the acoustic path shows up as a
small, always positive, measurement error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .geometry import GeometryError, wrap_angle

DEFAULT_APERTURE = math.radians(30.0)


class Pose2(NamedTuple):
    x: float
    y: float
    heading: float = 0.0


def circumradius_from_side(l, n):
    if n < 3 or l <= 0:
        raise GeometryError("a polygon needs n >= 3 and a positive side")
    return l / (2.0 * math.sin(math.pi / n))


def apothem(l, n):
    r = circumradius_from_side(l, n)
    return math.sqrt(r * r - (l / 2.0) ** 2)


def side_from_apothem(a, n):
    """Inverse of :func:`apothem`."""
    if n < 3 or a <= 0:
        raise GeometryError("a polygon needs n >= 3 and a positive apothem")
    return 2.0 * a * math.tan(math.pi / n)


@dataclass(frozen=True)
class PolygonRing:
    """A regular polygon carrying transducers.

    ``phase`` is the local angle of side 0's outward normal.  ``active_sides``
    restricts which sides carry transducers (a beacon is a quarter of an
    octagon); ``per_side`` transducers are spread evenly along each active
    side and face radially outward.  ``split_gap`` separates the two halves
    of the polygon along the local x axis, each half moving ``gap / 2`` away
    from the centre.
    """

    n_sides: int
    side_length: float
    split_gap: float = 0.0
    pose: Pose2 = Pose2(0.0, 0.0, 0.0)
    phase: float = 0.0
    active_sides: tuple | None = None
    per_side: int = 1
    aperture: float = DEFAULT_APERTURE

    def __post_init__(self):
        if self.n_sides < 3:
            raise GeometryError("n_sides must be >= 3")
        if self.side_length <= 0:
            raise GeometryError("side_length must be positive")
        if self.split_gap < 0:
            raise GeometryError("split_gap must be >= 0")
        if self.per_side < 1:
            raise GeometryError("per_side must be >= 1")
        if not 0.0 < self.aperture < 2.0 * math.pi:
            raise GeometryError("aperture must lie in (0, 2pi)")
        if self.active_sides is not None:
            bad = [s for s in self.active_sides if not 0 <= s < self.n_sides]
            if bad or not self.active_sides:
                raise GeometryError(f"invalid active sides {self.active_sides!r}")

    @property
    def apothem(self):
        return apothem(self.side_length, self.n_sides)

    def moved(self, pose):
        return PolygonRing(self.n_sides, self.side_length, self.split_gap, Pose2(*pose),
                           self.phase, self.active_sides, self.per_side, self.aperture)


@dataclass(frozen=True)
class TransducerSite:
    index: int
    position: np.ndarray = field(compare=False)
    outward_normal: float
    effective_apothem: float
    aperture: float = DEFAULT_APERTURE
    side: int = 0


def local_sites(spec):
    """Site positions and axes in the ring frame, before the pose is applied."""
    a = spec.apothem
    sides = spec.active_sides if spec.active_sides is not None else range(spec.n_sides)
    out = []
    for k in sides:
        theta = spec.phase + 2.0 * math.pi * k / spec.n_sides
        normal = np.array([math.cos(theta), math.sin(theta)])
        tangent = np.array([-normal[1], normal[0]])
        for j in range(spec.per_side):
            t = (j + 0.5) / spec.per_side - 0.5
            p = a * normal + t * spec.side_length * tangent
            out.append((k, p))
    return out


def build_ring(spec):
    """Explicit world coordinates of every transducer of ``spec``."""
    half = spec.split_gap / 2.0
    c, s = math.cos(spec.pose.heading), math.sin(spec.pose.heading)
    rot = np.array([[c, -s], [s, c]])
    centre = np.array([spec.pose.x, spec.pose.y], dtype=float)
    sites = []
    for i, (side, p) in enumerate(local_sites(spec)):
        axis = math.atan2(p[1], p[0])
        if spec.per_side == 1:
            axis = spec.phase + 2.0 * math.pi * side / spec.n_sides
        q = p.copy()
        if p[0] > 1e-12:
            q[0] += half
        elif p[0] < -1e-12:
            q[0] -= half
        sites.append(TransducerSite(
            index=i,
            position=centre + rot @ q,
            outward_normal=float(wrap_angle(axis + spec.pose.heading)),
            effective_apothem=float(np.hypot(q[0], q[1])),
            aperture=spec.aperture,
            side=side,
        ))
    return sites


def sees(site, point, tol=1e-9):
    """True iff ``point`` lies inside the site's aperture."""
    d = np.asarray(point, dtype=float) - site.position
    if float(d @ d) < 1e-24:
        return True
    off = abs(float(wrap_angle(math.atan2(d[1], d[0]) - site.outward_normal)))
    return off <= site.aperture / 2.0 + tol


class NoVisiblePairError(ValueError):
    pass


class MeasuredDistance(NamedTuple):
    raw: float
    corrected: float
    site_a: TransducerSite
    site_b: TransducerSite


def measured_distance(ring_a, ring_b, max_range=None):
    """Shortest mutually visible transducer path between two built rings.

    ``corrected`` adds both effective apothems to the raw path, the
    estimate of the centre-to-centre distance.
    """
    best = None
    for sa in ring_a:
        for sb in ring_b:
            if not (sees(sa, sb.position) and sees(sb, sa.position)):
                continue
            raw = float(np.linalg.norm(sb.position - sa.position))
            if max_range is not None and raw > max_range:
                continue
            if best is None or raw < best[0] - 1e-15:
                best = (raw, sa, sb)
    if best is None:
        raise NoVisiblePairError("no mutually visible transducer pair")
    raw, sa, sb = best
    return MeasuredDistance(raw, raw + sa.effective_apothem + sb.effective_apothem, sa, sb)


# combined apothem of 6 cm reproduces the 2 mm at 15 degrees figure
DEFAULT_ROBOT_APOTHEM = 0.03
DEFAULT_BEACON_APOTHEM = 0.03


def facing_pair(distance, w, robot_apothem=DEFAULT_ROBOT_APOTHEM, beacon_apothem=DEFAULT_BEACON_APOTHEM,
                robot_sides=12, beacon_sides=8):
    """Robot ring at the origin and a beacon polygon ``distance`` away on +x.

    At ``w == 0`` a robot transducer and a beacon transducer sit on the line
    of centres.  Both polygons are then turned by ``w`` in the same sense, so
    the two chosen apothems tilt away from the acoustic path on opposite
    sides.
    """
    robot = PolygonRing(robot_sides, side_from_apothem(robot_apothem, robot_sides), pose=Pose2(0.0, 0.0, w))
    beacon = PolygonRing(beacon_sides, side_from_apothem(beacon_apothem, beacon_sides),
                         pose=Pose2(distance, 0.0, math.pi + w))
    return build_ring(robot), build_ring(beacon)


def error_curve(kind, fixed, sweep, **pair_kw):
    """Rows of ``(sweep_value, corrected - true)`` in metres.

    ``kind == "angle"``: ``fixed`` is the centre distance, ``sweep`` the
    relative orientations in radians.  ``kind == "distance"``: ``fixed`` is
    the orientation and ``sweep`` the centre distances.
    """
    rows = []
    for v in sweep:
        if kind == "angle":
            d, w = fixed, v
        elif kind == "distance":
            d, w = v, fixed
        else:
            raise ValueError(f"unknown curve kind {kind!r}")
        ra, rb = facing_pair(d, w, **pair_kw)
        m = measured_distance(ra, rb)
        rows.append((float(v), m.corrected - d))
    return rows


def robot_ring(n_sides=12, apothem_m=DEFAULT_ROBOT_APOTHEM, gap=0.0, pose=Pose2(0.0, 0.0, 0.0)):
    return PolygonRing(n_sides, side_from_apothem(apothem_m, n_sides), split_gap=gap, pose=Pose2(*pose))


def beacon_array(pose, arc=math.pi / 2, n_transducers=4, apothem_m=DEFAULT_BEACON_APOTHEM,
                 aperture=DEFAULT_APERTURE):
    """A beacon: a slice of an octagon facing ``pose.heading``.

    The default 90 degree arc is a quarter octagon (two sides) carrying four
    transducers, two per side, each looking into its own 22.5 degree sector.
    """
    n = 8
    n_active = max(1, round(arc / (2.0 * math.pi / n)))
    if n_transducers % n_active:
        raise GeometryError("transducers must spread evenly over the active sides")
    first = -(n_active - 1) / 2.0
    phase = first * 2.0 * math.pi / n
    return PolygonRing(n, side_from_apothem(apothem_m, n), pose=Pose2(*pose), phase=phase,
                       active_sides=tuple(range(n_active)), per_side=n_transducers // n_active,
                       aperture=aperture)
