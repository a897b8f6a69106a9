"""Position fixes from beacon ranges.

Spherical trilateration in a canonical beacon frame, slant-to-planar height
correction, planar two-circle intersection and root disambiguation.
"""

from __future__ import annotations

import itertools
import math
from typing import NamedTuple

import numpy as np

# radicands in [-RADICAND_TOL, 0] are tangencies, not misses (m^2)
RADICAND_TOL = 1e-9
DEGENERATE_TOL = 1e-9


class SolverError(ValueError):
    pass


class NoSolutionError(SolverError):
    pass


class DegenerateGeometryError(SolverError):
    pass


class InconsistentMeasurementError(SolverError):
    pass


class NoFixError(SolverError):
    pass


class AmbiguousFixError(SolverError):
    def __init__(self, candidates):
        super().__init__(f"{len(candidates)} candidates survive and there is no history to choose")
        self.candidates = candidates


class RangeObservation(NamedTuple):
    beacon_id: str
    beacon_position: tuple
    distance: float


class FixResult(NamedTuple):
    position: np.ndarray
    candidates: list
    chosen_by: str  # "unique", "room_bounds" or "proximity"
    residual: float
    beacons: tuple = ()


def _root(radicand):
    if radicand < -RADICAND_TOL:
        raise NoSolutionError(f"ranges do not intersect (radicand {radicand:.3g} m^2)")
    return math.sqrt(max(radicand, 0.0))


def trilaterate_canonical(r1, r2, r3, d, i, j):
    """Intersect three spheres centred at (0,0,0), (d,0,0) and (i,j,0)."""
    if d <= 0:
        raise DegenerateGeometryError("first two beacons coincide")
    if abs(j) < DEGENERATE_TOL:
        raise DegenerateGeometryError("beacons are collinear")
    x = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d)
    y = (r1 * r1 - r3 * r3 + i * i + j * j) / (2.0 * j) - (i / j) * x
    z = _root(r1 * r1 - x * x - y * y)
    if z == 0.0:
        return [np.array([x, y, 0.0])]
    return [np.array([x, y, z]), np.array([x, y, -z])]


def trilaterate3(obs):
    """Three-sphere fix in world coordinates: zero, one or two points."""
    if len(obs) != 3:
        raise SolverError("trilateration takes exactly three ranges")
    p = [np.asarray(o.beacon_position, dtype=float) for o in obs]
    ex = p[1] - p[0]
    d = float(np.linalg.norm(ex))
    if d < DEGENERATE_TOL:
        raise DegenerateGeometryError("first two beacons coincide")
    ex /= d
    v = p[2] - p[0]
    i = float(ex @ v)
    ey = v - i * ex
    j = float(np.linalg.norm(ey))
    if j < DEGENERATE_TOL:
        raise DegenerateGeometryError("beacons are collinear")
    ey /= j
    ez = np.cross(ex, ey)
    frame = np.column_stack([ex, ey, ez])
    local = trilaterate_canonical(obs[0].distance, obs[1].distance, obs[2].distance, d, i, j)
    return [p[0] + frame @ q for q in local]


def height_correct(slant, beacon_h, emitter_h):
    """In-plane distance from a slant range and the two mounting heights."""
    dh = beacon_h - emitter_h
    rad = slant * slant - dh * dh
    if rad < -RADICAND_TOL:
        raise InconsistentMeasurementError(f"range {slant:.4f} m shorter than the height offset {abs(dh):.4f} m")
    return math.sqrt(max(rad, 0.0))


def bilaterate2(obs):
    """Intersect two circles in the plane.

    Subtracting the two circle equations leaves the radical line, which is
    perpendicular to the baseline at distance ``a`` from the first centre;
    putting it back into the first circle gives the half-chord ``h``.
    """
    if len(obs) != 2:
        raise SolverError("bilateration takes exactly two ranges")
    c1 = np.asarray(obs[0].beacon_position, dtype=float)[:2]
    c2 = np.asarray(obs[1].beacon_position, dtype=float)[:2]
    r1, r2 = obs[0].distance, obs[1].distance
    u = c2 - c1
    dist = float(np.hypot(u[0], u[1]))
    if dist < DEGENERATE_TOL:
        raise DegenerateGeometryError("concentric beacons")
    u /= dist
    a = (r1 * r1 - r2 * r2 + dist * dist) / (2.0 * dist)
    h = _root(r1 * r1 - a * a)
    base = c1 + a * u
    if h == 0.0:
        return [base]
    n = np.array([-u[1], u[0]])
    return [base + h * n, base - h * n]


def residual(point, obs):
    """RMS misfit between the point's distances and the observed ranges."""
    point = np.asarray(point, dtype=float)
    errs = []
    for o in obs:
        b = np.asarray(o.beacon_position, dtype=float)[: len(point)]
        errs.append(float(np.linalg.norm(point - b)) - o.distance)
    return math.sqrt(sum(e * e for e in errs) / len(errs))


def disambiguate(candidates, room=None, previous=None, z_max=None, margin=0.05):
    """Pick one root: drop those outside the room, then take the one nearest the previous fix."""
    if not candidates:
        raise NoFixError("no candidates")
    cands = [np.asarray(c, dtype=float) for c in candidates]
    if len(cands) == 2 and np.allclose(cands[0], cands[1], atol=1e-12):
        cands = cands[:1]
    if len(cands) == 1 and room is None and z_max is None:
        return cands[0], "unique"
    survivors = cands
    if room is not None:
        survivors = [c for c in survivors if room.contains(c[:2], tol=margin)]
    if z_max is not None:
        survivors = [c for c in survivors if len(c) < 3 or c[2] <= z_max + 1e-9]
    if not survivors:
        raise NoFixError("every candidate lies outside the room")
    if len(cands) == 1:
        return survivors[0], "unique"
    if len(survivors) == 1:
        return survivors[0], "room_bounds"
    if previous is None:
        raise AmbiguousFixError(survivors)
    prev = np.asarray(previous, dtype=float)
    k = min(len(prev), len(survivors[0]))
    best = min(survivors, key=lambda c: float(np.linalg.norm(c[:k] - prev[:k])))
    return best, "proximity"


def _conditioning(c1, c2, r1, r2):
    """Sine of the angle at which two circles cross; 0 when tangent or disjoint."""
    d = math.dist(c1[:2], c2[:2])
    if d == 0 or r1 <= 0 or r2 <= 0:
        return 0.0
    cos_t = (r1 * r1 + r2 * r2 - d * d) / (2 * r1 * r2)
    return math.sqrt(max(0.0, 1.0 - min(1.0, cos_t * cos_t)))


def solve_planar(obs, room=None, previous=None):
    """Two-circle fix from in-plane ranges, using the best-conditioned beacon pair."""
    if len(obs) < 2:
        raise NoFixError("need at least two ranges for a planar fix")
    pairs = sorted(itertools.combinations(range(len(obs)), 2),
                   key=lambda ij: -_conditioning(obs[ij[0]].beacon_position, obs[ij[1]].beacon_position,
                                                 obs[ij[0]].distance, obs[ij[1]].distance))
    last_err = None
    for i, j in pairs:
        pair = [obs[i], obs[j]]
        try:
            cands = bilaterate2(pair)
            pos, how = disambiguate(cands, room, previous)
        except (NoSolutionError, DegenerateGeometryError, NoFixError) as exc:
            last_err = exc
            continue
        return FixResult(pos, cands, how, residual(pos, pair), (obs[i].beacon_id, obs[j].beacon_id))
    raise last_err


def solve_spatial(obs, room=None, previous=None, z_max=None):
    if len(obs) < 3:
        raise NoFixError("need at least three ranges for a spatial fix")
    trio = list(obs[:3])
    cands = trilaterate3(trio)
    pos, how = disambiguate(cands, room, previous, z_max=z_max)
    return FixResult(pos, cands, how, residual(pos, trio), tuple(o.beacon_id for o in trio))


def fix_pipeline(cycle, scenario, previous=None, three_d=False):
    """Solve one measurement cycle.

    ``cycle.records`` carry apothem-corrected slant distances (centre to
    centre); a record whose ``distance`` is None is skipped.  The ranges are height-corrected and intersected in the
    plane, or trilaterated directly when ``three_d`` is set.
    """
    records = cycle.records.values() if isinstance(cycle.records, dict) else cycle.records
    recs = sorted((r for r in records if r.distance is not None), key=lambda r: r.beacon_id)
    if len(recs) < 2:
        raise NoFixError(f"{len(recs)} usable range(s); need at least two")
    emitter_h = scenario.robot.height_m
    if three_d and len(recs) >= 3:
        obs = []
        for r in recs:
            b = scenario.beacon(r.beacon_id)
            obs.append(RangeObservation(b.id, (b.position[0], b.position[1], b.height_m), r.distance))
        z_max = min(scenario.beacon(r.beacon_id).height_m for r in recs)
        return solve_spatial(obs, scenario.room_polygon, previous, z_max=z_max)
    obs = []
    for r in recs:
        b = scenario.beacon(r.beacon_id)
        planar = height_correct(r.distance, b.height_m, emitter_h)
        obs.append(RangeObservation(b.id, (b.position[0], b.position[1]), planar))
    prev2 = None if previous is None else np.asarray(previous, dtype=float)[:2]
    return solve_planar(obs, scenario.room_polygon, prev2)
