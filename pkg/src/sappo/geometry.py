"""Planar primitives, room polygons and closed-form coverage areas.

Points are plain ``(x, y)`` tuples or numpy arrays in metres; angles are in
radians unless a name says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

EPS = 1e-12


class GeometryError(ValueError):
    """Raised for degenerate or out-of-domain geometric input."""


def _check_aperture(beta):
    if not 0.0 < beta < math.pi:
        raise GeometryError(f"aperture must lie in (0, pi), got {beta!r}")


def footprint_diameter(h, beta):
    """Diameter of the disc a cone of aperture ``beta`` draws on a plane at distance ``h``."""
    _check_aperture(beta)
    if h < 0:
        raise GeometryError(f"distance must be non-negative, got {h!r}")
    return 2.0 * h * math.tan(beta / 2.0)


def disc_area(diameter):
    if diameter < 0:
        raise GeometryError(f"diameter must be non-negative, got {diameter!r}")
    return math.pi * (diameter / 2.0) ** 2


def sector_area(r, arc):
    """Area of a circular sector of radius ``r`` spanning ``arc`` radians."""
    if r < 0:
        raise GeometryError(f"radius must be non-negative, got {r!r}")
    if not 0.0 <= arc <= 2.0 * math.pi + EPS:
        raise GeometryError(f"arc must lie in [0, 2pi], got {arc!r}")
    return 0.5 * r * r * arc


def cone_triangle_area(h, beta):
    """Area of the isosceles triangle a cone projects when lying flat.

    Height ``h`` along the axis, apex angle ``beta``: base ``2 h tan(beta/2)``.
    """
    return 0.5 * h * footprint_diameter(h, beta)


def lens_area(r, d):
    """Intersection area of two circles of equal radius ``r`` whose centres are ``d`` apart.

    At ``d == r`` this reduces to ``(2*pi/3 - sqrt(3)/2) * r**2``.
    """
    if r <= 0:
        raise GeometryError(f"radius must be positive, got {r!r}")
    if d < 0:
        raise GeometryError(f"centre distance must be non-negative, got {d!r}")
    if d >= 2.0 * r:
        return 0.0
    half = d / 2.0
    return 2.0 * r * r * math.acos(half / r) - half * math.sqrt(4.0 * r * r - d * d)


def circle_intersection_area(r1, r2, d):
    """General two-circle lens area for unequal radii."""
    if r1 <= 0 or r2 <= 0:
        raise GeometryError("radii must be positive")
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2) or d < 1e-12:
        return math.pi * min(r1, r2) ** 2
    a1 = math.acos(min(1.0, max(-1.0, (d * d + r1 * r1 - r2 * r2) / (2 * d * r1))))
    a2 = math.acos(min(1.0, max(-1.0, (d * d + r2 * r2 - r1 * r1) / (2 * d * r2))))
    kite = 0.5 * math.sqrt((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2))
    return r1 * r1 * a1 + r2 * r2 * a2 - kite


def wrap_angle(a):
    """Wrap an angle (scalar or array) to [-pi, pi)."""
    return (np.asarray(a) + math.pi) % (2.0 * math.pi) - math.pi


def mirror_across_wall(p, wall):
    """Reflect point ``p`` across the line supporting segment ``wall = (a, b)``."""
    a = np.asarray(wall[0], dtype=float)
    b = np.asarray(wall[1], dtype=float)
    p = np.asarray(p, dtype=float)
    u = b - a
    n2 = float(u @ u)
    if n2 < EPS:
        raise GeometryError("wall has zero length")
    foot = a + u * (float((p - a) @ u) / n2)
    return 2.0 * foot - p


def segment_intersection(p1, p2, q1, q2):
    """Parameters ``(t, s)`` where ``p1 + t (p2-p1) == q1 + s (q2-q1)``, or None if parallel."""
    p1 = np.asarray(p1, dtype=float)
    r = np.asarray(p2, dtype=float) - p1
    q1 = np.asarray(q1, dtype=float)
    s_vec = np.asarray(q2, dtype=float) - q1
    denom = r[0] * s_vec[1] - r[1] * s_vec[0]
    if abs(denom) < EPS:
        return None
    qp = q1 - p1
    t = (qp[0] * s_vec[1] - qp[1] * s_vec[0]) / denom
    s = (qp[0] * r[1] - qp[1] * r[0]) / denom
    return t, s


@dataclass(frozen=True)
class Cone2:
    """Planar emission/reception wedge."""

    apex: tuple
    axis_angle: float
    aperture: float
    range: float

    def __post_init__(self):
        _check_aperture(self.aperture)
        if self.range <= 0:
            raise GeometryError("cone range must be positive")


def in_cone(cone, p, tol=1e-9):
    """True iff ``p`` is within range of the apex and within half the aperture of its axis."""
    dx = p[0] - cone.apex[0]
    dy = p[1] - cone.apex[1]
    dist = math.hypot(dx, dy)
    if dist > cone.range + tol:
        return False
    if dist < EPS:
        return True
    off = abs(float(wrap_angle(math.atan2(dy, dx) - cone.axis_angle)))
    return off <= cone.aperture / 2.0 + tol


@dataclass
class Room:
    """Simple polygon, vertices counter-clockwise."""

    vertices: np.ndarray
    walls: list = field(init=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise GeometryError("a room needs at least 3 (x, y) vertices")
        if not np.all(np.isfinite(v)):
            raise GeometryError("room vertices must be finite")
        if _signed_area(v) < 0:
            v = v[::-1].copy()
        if abs(_signed_area(v)) < EPS:
            raise GeometryError("room polygon has zero area")
        self.vertices = v
        self.walls = [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]
        if _self_intersects(self.walls):
            raise GeometryError("room polygon is self-intersecting")

    @classmethod
    def rectangle(cls, width, length, origin=(0.0, 0.0)):
        x0, y0 = origin
        return cls(np.array([[x0, y0], [x0 + width, y0], [x0 + width, y0 + length], [x0, y0 + length]]))

    @property
    def area(self):
        return _signed_area(self.vertices)

    @property
    def bounds(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return lo[0], lo[1], hi[0], hi[1]

    def contains(self, points, tol=1e-9):
        """Vectorised point-in-polygon; points on the boundary count as inside."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        x = pts[:, 0]
        y = pts[:, 1]
        inside = np.zeros(len(pts), dtype=bool)
        on_edge = np.zeros(len(pts), dtype=bool)
        for a, b in self.walls:
            ax, ay = a
            bx, by = b
            crosses = (ay > y) != (by > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = ax + (y - ay) * (bx - ax) / (by - ay)
            inside ^= crosses & (x < xint)
            on_edge |= _point_segment_distance(pts, a, b) <= tol
        inside |= on_edge
        return inside if np.ndim(points) > 1 else bool(inside[0])

    def blocked(self, a, b, skip=(), tol=1e-9):
        """True when the open segment ``a -> b`` properly crosses a wall.

        Touching a wall at either endpoint (a beacon mounted on it, a
        reflection point) does not count as blocking.
        """
        for i, (w0, w1) in enumerate(self.walls):
            if i in skip:
                continue
            hit = segment_intersection(a, b, w0, w1)
            if hit is None:
                continue
            t, s = hit
            if tol < t < 1.0 - tol and -tol <= s <= 1.0 + tol:
                return True
        return False

    def blocked_many(self, origin, targets, tol=1e-9):
        """Vectorised :meth:`blocked` from one origin to many targets."""
        o = np.asarray(origin, dtype=float)
        tg = np.atleast_2d(np.asarray(targets, dtype=float))
        r = tg - o
        out = np.zeros(len(tg), dtype=bool)
        for w0, w1 in self.walls:
            s_vec = w1 - w0
            denom = r[:, 0] * s_vec[1] - r[:, 1] * s_vec[0]
            qp = w0 - o
            ok = np.abs(denom) > EPS
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (qp[0] * s_vec[1] - qp[1] * s_vec[0]) / denom
                s = (qp[0] * r[:, 1] - qp[1] * r[:, 0]) / denom
            out |= ok & (t > tol) & (t < 1.0 - tol) & (s >= -tol) & (s <= 1.0 + tol)
        return out


def _signed_area(v):
    x = v[:, 0]
    y = v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _point_segment_distance(pts, a, b):
    a = np.asarray(a, dtype=float)
    u = np.asarray(b, dtype=float) - a
    t = np.clip(((pts - a) @ u) / float(u @ u), 0.0, 1.0)
    return np.linalg.norm(pts - (a + t[:, None] * u), axis=1)


def _self_intersects(walls):
    n = len(walls)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            hit = segment_intersection(walls[i][0], walls[i][1], walls[j][0], walls[j][1])
            if hit is not None and 0.0 <= hit[0] <= 1.0 and 0.0 <= hit[1] <= 1.0:
                return True
    return False
