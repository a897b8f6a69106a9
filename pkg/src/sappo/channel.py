"""Acoustic and radio propagation: sound speed, direct and first-order
reflected ultrasonic paths, timing noise and sync decode latency."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import mirror_across_wall


class ChannelError(ValueError):
    pass


def sound_speed(temperature_c):
    """Linear dry-air model, ``331.4 + 0.606 T`` m/s, valid from -40 to 60 C."""
    if not -40.0 <= temperature_c <= 60.0:
        raise ChannelError(f"temperature {temperature_c} C outside [-40, 60]")
    return 331.4 + 0.606 * temperature_c


@dataclass(frozen=True)
class AirModel:
    temperature_c: float = 20.0
    # accepted for completeness; the linear model ignores it
    humidity: float | None = None

    @property
    def sound_speed(self):
        return sound_speed(self.temperature_c)


@dataclass(frozen=True)
class NoiseModel:
    tof_sigma: float = 25e-6
    outlier_rate: float = 0.10
    outlier_extra: tuple = (0.01, 0.05)  # metres, uniform
    miss_rate: float = 0.0  # chance a beacon misses the earliest arrival

    def __post_init__(self):
        if self.tof_sigma < 0:
            raise ChannelError("tof_sigma must be >= 0")
        for name in ("outlier_rate", "miss_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ChannelError(f"{name} must lie in [0, 1]")
        lo, hi = self.outlier_extra
        if lo < 0 or hi < lo:
            raise ChannelError("outlier_extra must be an ordered non-negative range")


def apply_noise(tof, noise, rng, c):
    """Noisy time of flight: Gaussian jitter plus an occasional late detection.

    Always consumes exactly three draws from ``rng`` so streams stay aligned
    whatever the parameters.
    """
    g, u, e = rng.standard_normal(), rng.random(), rng.random()
    out = tof + noise.tof_sigma * g
    if u < noise.outlier_rate:
        lo, hi = noise.outlier_extra
        out += (lo + (hi - lo) * e) / c
    return out


@dataclass(frozen=True)
class RfModel:
    """Sync-packet decode latency.

    ``simple_ook`` is the bare 433 MHz carrier detector: a fixed few
    microseconds.  ``packet_radio`` stands for running sync through a full
    protocol stack, whose delivery instant wanders widely.
    """

    kind: str = "simple_ook"
    ook_latency: float = 5e-6
    packet_latency: tuple = (50e-6, 500e-6)
    report_latency: float = 0.6e-3  # per beacon report on the shared radio
    overhead: float = 0.5e-3  # robot turnaround once all reports are in

    def __post_init__(self):
        if self.kind not in ("simple_ook", "packet_radio"):
            raise ChannelError(f"unknown rf kind {self.kind!r}")
        lo, hi = self.packet_latency
        if min(self.ook_latency, lo, self.report_latency, self.overhead) < 0 or hi < lo:
            raise ChannelError("latencies must be non-negative")

    def draw(self, rng):
        u = rng.random()
        if self.kind == "simple_ook":
            return self.ook_latency
        lo, hi = self.packet_latency
        return lo + (hi - lo) * u

    @property
    def nominal(self):
        """Mean decode latency, which the robot calibrates out."""
        if self.kind == "simple_ook":
            return self.ook_latency
        return sum(self.packet_latency) / 2.0


class Receiver(NamedTuple):
    """A beacon as the channel sees it."""

    id: str
    sites: list
    range: float
    height: float


class Arrival(NamedTuple):
    beacon_id: str
    transducer_index: int
    emitter_index: int
    tof: float
    path: str  # "direct" or "reflected"
    wall: int | None
    path_length: float  # slant length through the air
    planar_length: float
    emitter_apothem: float
    receiver_apothem: float


def _sees(site, px, py, tol=1e-9):
    dx = px - site.position[0]
    dy = py - site.position[1]
    if dx * dx + dy * dy < 1e-24:
        return True
    off = math.atan2(dy, dx) - site.outward_normal
    off = (off + math.pi) % (2.0 * math.pi) - math.pi
    return abs(off) <= site.aperture / 2.0 + tol


def _side(w0, w1, px, py):
    return (w1[0] - w0[0]) * (py - w0[1]) - (w1[1] - w0[1]) * (px - w0[0])


def propagate(emitters, receivers, room, air, max_order=1, emitter_height=1.45):
    """Every ultrasonic path from the emitter ring to the beacons.

    A direct path needs both transducers to see each other, a clear line and
    a slant length within range.  With ``max_order == 1`` each wall also acts
    as a mirror: the path runs emitter -> reflection point -> receiver and
    must respect both apertures, the range, and any other wall.
    """
    if max_order not in (0, 1):
        raise ChannelError("max_order must be 0 or 1")
    c = air.sound_speed
    walls = room.walls if room is not None else []
    images = []
    if max_order == 1:
        for e in emitters:
            images.append([mirror_across_wall(e.position, w) for w in walls])
    out = []
    for rx in receivers:
        dh2 = (rx.height - emitter_height) ** 2
        for ei, e in enumerate(emitters):
            ex, ey = float(e.position[0]), float(e.position[1])
            for s in rx.sites:
                sx, sy = float(s.position[0]), float(s.position[1])
                planar = math.hypot(sx - ex, sy - ey)
                slant = math.sqrt(planar * planar + dh2)
                if (slant <= rx.range and _sees(e, sx, sy) and _sees(s, ex, ey)
                        and (room is None or not room.blocked((ex, ey), (sx, sy)))):
                    out.append(Arrival(rx.id, s.index, e.index, slant / c, "direct", None, slant, planar,
                                       e.effective_apothem, s.effective_apothem))
                if max_order == 0:
                    continue
                for wi, (w0, w1) in enumerate(walls):
                    se = _side(w0, w1, ex, ey)
                    ss = _side(w0, w1, sx, sy)
                    if se * ss <= 1e-12:
                        continue  # a transducer on the wall line, or walls between
                    ix, iy = images[ei][wi]
                    planar_r = math.hypot(sx - ix, sy - iy)
                    slant_r = math.sqrt(planar_r * planar_r + dh2)
                    if slant_r > rx.range:
                        continue
                    px, py, ok = _reflection_point(w0, w1, ix, iy, sx, sy)
                    if not ok:
                        continue
                    if not (_sees(e, px, py) and _sees(s, px, py)):
                        continue
                    if room.blocked((ex, ey), (px, py), skip=(wi,)) or room.blocked((px, py), (sx, sy), skip=(wi,)):
                        continue
                    out.append(Arrival(rx.id, s.index, e.index, slant_r / c, "reflected", wi, slant_r, planar_r,
                                       e.effective_apothem, s.effective_apothem))
    out.sort(key=lambda a: (a.beacon_id, a.tof, a.transducer_index, a.emitter_index))
    return out


def _reflection_point(w0, w1, ix, iy, sx, sy):
    rx_, ry_ = sx - ix, sy - iy
    ux, uy = w1[0] - w0[0], w1[1] - w0[1]
    den = rx_ * uy - ry_ * ux
    if abs(den) < 1e-15:
        return 0.0, 0.0, False
    qx, qy = w0[0] - ix, w0[1] - iy
    t = (qx * uy - qy * ux) / den
    s = (qx * ry_ - qy * rx_) / den
    if not (0.0 < t < 1.0 and -1e-9 <= s <= 1.0 + 1e-9):
        return 0.0, 0.0, False
    return ix + t * rx_, iy + t * ry_, True


def earliest_by_beacon(arrivals):
    """First arrival per beacon; ``arrivals`` sorted as :func:`propagate` returns them."""
    first = {}
    for a in arrivals:
        if a.beacon_id not in first or a.tof < first[a.beacon_id].tof:
            first[a.beacon_id] = a
    return first


def make_rng(seed, *stream):
    """Independent, reproducible stream keyed by ``(seed, *stream)``."""
    return np.random.default_rng([int(seed), *[int(s) for s in stream]])
