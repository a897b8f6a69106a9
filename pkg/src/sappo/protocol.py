"""Beacon and robot state machines on a deterministic discrete-event clock.

One measurement cycle: the robot broadcasts a sync packet and fires its whole
emitter ring at the same instant; each beacon starts its timer when it
decodes the sync, stops it at the first ultrasonic arrival it hears, and
reports the time of flight over the shared packet radio.  Arrivals are
scheduled at absolute times, so an echo of an earlier burst that is still in
the air when a beacon re-arms is detected exactly like a real pulse.
"""

from __future__ import annotations

import heapq
import itertools
import math
import statistics
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .channel import Receiver, apply_noise, make_rng, propagate
from .ring import Pose2, build_ring

# minimum time between bursts so the previous one has died out (s)
MIN_GUARD = 0.030

MCU_MODES_MA = {
    "power_down_board": 0.15,
    "power_down_ext_crystal": 0.03,
    "idle_16MHz": 12.0,
    "adc_nr": 10.9,
    "power_save": 2.9,
    "standby": 1.3,
}
# nRF24L01 receiver current; the beacon listens with the MCU idling
RADIO_RX_MA = 12.3

BEACON_MODES = ("sleeping", "listening_window", "armed", "timing", "reporting")


class EventQueue:
    """Priority queue of timestamped events; ties break in insertion order."""

    def __init__(self):
        self._heap = []
        self._seq = itertools.count()
        self.now = 0.0

    def push(self, t, kind, **payload):
        heapq.heappush(self._heap, (t, next(self._seq), kind, payload))

    def pop(self):
        t, _, kind, payload = heapq.heappop(self._heap)
        self.now = t
        return t, kind, payload

    def peek_time(self):
        return self._heap[0][0] if self._heap else math.inf

    def __len__(self):
        return len(self._heap)


# -- power ----------------------------------------------------------------


@dataclass(frozen=True)
class PowerProfile:
    currents: dict = field(default_factory=lambda: dict(MCU_MODES_MA))
    radio_rx: float = RADIO_RX_MA
    battery_mah: float = 2000.0

    def __post_init__(self):
        if any(v <= 0 for v in self.currents.values()) or self.radio_rx <= 0:
            raise ValueError("all currents must be positive")
        if self.battery_mah <= 0:
            raise ValueError("battery capacity must be positive")

    def mode_current(self, mode):
        """Current (mA) a beacon draws in one of its protocol modes, or a raw microcontroller mode."""
        if mode == "sleeping":
            return self.currents["power_down_ext_crystal"]
        if mode in ("listening_window", "armed", "timing", "reporting"):
            return self.currents["idle_16MHz"] + self.radio_rx
        return self.currents[mode]


def average_current(profile, duty):
    """Time-weighted mean current in mA.

    ``duty`` is a mode name, a constant current, or a sequence of
    ``(mode or current, seconds)`` pairs.
    """
    if isinstance(duty, str):
        return profile.mode_current(duty)
    if isinstance(duty, (int, float)):
        return float(duty)
    total_t = 0.0
    charge = 0.0
    for what, secs in duty:
        i = profile.mode_current(what) if isinstance(what, str) else float(what)
        charge += i * secs
        total_t += secs
    if total_t <= 0:
        raise ValueError("duty trace has no duration")
    return charge / total_t


def battery_life(profile, duty):
    """Hours the profile's battery lasts under ``duty``."""
    i = average_current(profile, duty)
    if i <= 0:
        raise ValueError("average current must be positive")
    return profile.battery_mah / i


def lowpower_duty(period_s=5.0, listen_s=0.1):
    """One sleep quantum of a battery beacon: a short listen, then power-down."""
    return [("listening_window", listen_s), ("sleeping", period_s - listen_s)]


# -- beacon state ------------------------------------------------------------


@dataclass
class BeaconState:
    id: str
    mode: str = "armed"
    power_mode: str = "idle_16MHz"
    timer_start: float | None = None
    cycle: int | None = None
    detected: tuple | None = None
    energy_used: float = 0.0  # mAh
    durations: dict = field(default_factory=lambda: {m: 0.0 for m in BEACON_MODES})
    since: float = 0.0

    def set_mode(self, mode, t, profile):
        self.settle(t, profile)
        self.mode = mode
        self.power_mode = "power_down_ext_crystal" if mode == "sleeping" else "idle_16MHz"

    def settle(self, t, profile):
        dt = t - self.since
        if dt > 0:
            self.durations[self.mode] += dt
            self.energy_used += profile.mode_current(self.mode) * dt / 3600.0
        self.since = max(self.since, t)


# -- low-power wake/sleep ----------------------------------------------------


class WakeBroadcast(NamedTuple):
    start: float
    ids: tuple
    duration: float = 5.0


class MeasureRequest(NamedTuple):
    time: float


class Release(NamedTuple):
    time: float


class LowPowerBeacon:
    """Battery beacon: power-down in fixed quanta, a short radio listen at the
    start of each, awake only when a wake broadcast names it, asleep again on
    release or after an idle minute."""

    def __init__(self, state, phase=0.0, quantum=5.0, listen=0.1, idle_timeout=60.0, profile=None):
        self.state = state
        self.phase = phase
        self.quantum = quantum
        self.listen = listen
        self.idle_timeout = idle_timeout
        self.profile = profile or PowerProfile()
        self.broadcasts = []
        self.last_activity = None
        self.token = 0

    @property
    def awake(self):
        return self.state.mode not in ("sleeping", "listening_window")

    def start(self, q, trace, t=0.0):
        self.state.mode = "sleeping"
        self.state.power_mode = "power_down_ext_crystal"
        self.state.since = t
        self._schedule_window(q, t)

    def _schedule_window(self, q, t):
        k = math.ceil((t - self.phase) / self.quantum - 1e-12)
        self.token += 1
        q.push(self.phase + max(k, 0) * self.quantum, "lp_window", beacon=self.state.id, token=self.token)

    def hear(self, b):
        if self.state.id in b.ids:
            self.broadcasts.append(b)

    def on_event(self, kind, t, payload, q, trace):
        st = self.state
        if kind == "lp_window":
            if payload["token"] != self.token or st.mode != "sleeping":
                return
            st.set_mode("listening_window", t, self.profile)
            trace.append((t, st.id, "listen", f"{self.listen:.3f}s"))
            start = self._heard_in(t, t + self.listen)
            if start is not None:
                q.push(start, "lp_wake", beacon=st.id, token=self.token)
            else:
                q.push(t + self.listen, "lp_window_end", beacon=st.id, token=self.token)
        elif kind == "lp_window_end":
            if payload["token"] != self.token or st.mode != "listening_window":
                return
            st.set_mode("sleeping", t, self.profile)
            q.push(t - self.listen + self.quantum, "lp_window", beacon=st.id, token=self.token)
        elif kind == "lp_wake":
            if payload["token"] != self.token or st.mode != "listening_window":
                return
            st.set_mode("armed", t, self.profile)
            self.last_activity = t
            self.token += 1
            trace.append((t, st.id, "wake", "named in wake request"))
            q.push(t + self.idle_timeout, "lp_idle", beacon=st.id, token=self.token)
        elif kind == "lp_idle":
            if payload["token"] != self.token or not self.awake:
                return
            if t - self.last_activity >= self.idle_timeout - 1e-9:
                self.sleep(t, q, trace, "idle timeout")
            else:
                q.push(self.last_activity + self.idle_timeout, "lp_idle", beacon=st.id, token=self.token)

    def _heard_in(self, t0, t1):
        best = None
        for b in self.broadcasts:
            if b.start <= t1 and b.start + b.duration >= t0:
                s = max(t0, b.start)
                best = s if best is None else min(best, s)
        return best

    def activity(self, t):
        self.last_activity = t

    def sleep(self, t, q, trace, why):
        self.state.set_mode("sleeping", t, self.profile)
        trace.append((t, self.state.id, "sleep", why))
        self._schedule_window(q, t + 1e-12)


class LowPowerTrace(NamedTuple):
    rows: list
    state: BeaconState
    wake_times: list
    sleep_times: list


def lowpower_session(beacon_id, requests, horizon, phase=0.0, profile=None, quantum=5.0, listen=0.1,
                     idle_timeout=60.0):
    """Run one battery beacon against a stream of wake, measure and release requests."""
    profile = profile or PowerProfile()
    q = EventQueue()
    trace = []
    lp = LowPowerBeacon(BeaconState(beacon_id), phase, quantum, listen, idle_timeout, profile)
    lp.start(q, trace)
    for r in requests:
        if isinstance(r, WakeBroadcast):
            lp.hear(r)
            trace.append((r.start, "robot", "wake_broadcast", ",".join(r.ids)))
        elif isinstance(r, MeasureRequest):
            q.push(r.time, "measure", beacon=beacon_id)
        elif isinstance(r, Release):
            q.push(r.time, "release", beacon=beacon_id)
    while len(q) and q.peek_time() <= horizon:
        t, kind, payload = q.pop()
        if kind == "measure":
            if lp.awake:
                lp.activity(t)
                trace.append((t, beacon_id, "measure", "served"))
            else:
                trace.append((t, beacon_id, "measure", "asleep"))
        elif kind == "release":
            if lp.awake:
                lp.sleep(t, q, trace, "released")
        else:
            lp.on_event(kind, t, payload, q, trace)
    lp.state.settle(horizon, profile)
    trace.sort(key=lambda r: r[0])
    wakes = [r[0] for r in trace if r[2] == "wake"]
    sleeps = [r[0] for r in trace if r[2] == "sleep"]
    return LowPowerTrace(trace, lp.state, wakes, sleeps)


# -- pacing ------------------------------------------------------------------


def attenuation_guard(max_range, c):
    """Wait long enough for a burst to travel the full range, never under 30 ms."""
    return max(max_range / c, MIN_GUARD)


def next_cycle_delay(pacing, cycle, max_range, c, overhead):
    """Seconds from this cycle's emission to the next one."""
    guard = attenuation_guard(max_range, c)
    if pacing == "attenuation_wait":
        return guard
    if pacing != "ack_gated":
        raise ValueError(f"unknown pacing {pacing!r}")
    if not cycle.expected or not cycle.all_reported:
        return guard
    return min(cycle.last_report_time - cycle.emit_time + overhead, guard)


# -- ghost rejection ---------------------------------------------------------


class GhostDecision(NamedTuple):
    accepted: bool
    reason: str
    reset: bool = False


class GhostFilter:
    """Reject ranges that move faster than the robot can.

    Each beacon keeps a short window of accepted ranges.  A new range is
    compared with the window median; the allowance is the distance the robot
    could have covered since the oldest sample plus three noise deviations
    and a fixed ``slack`` for late detections.
    A jump of ``sector_jump`` or more receiver sectors is recorded as
    corroborating evidence but never rejects on its own.

    If the window was seeded by an echo every true range would be rejected
    from then on, so ``window`` consecutive rejections that agree with one
    another replace the history.
    """

    def __init__(self, sigma_d, window=5, sector_jump=2, reset_after=2.0, slack=0.0):
        self.sigma_d = sigma_d
        self.slack = slack
        self.window = window
        self.sector_jump = sector_jump
        self.reset_after = reset_after
        self.hist = {}
        self.rejected = {}
        self.seen = {}

    def check(self, beacon_id, t, distance, sector, speed):
        h = self.hist.get(beacon_id)
        reset = False
        # only silence resets the history; a run of rejections does not
        if h and t - self.seen.get(beacon_id, t) > self.reset_after:
            h = None
            reset = True
        self.seen[beacon_id] = t
        sample = (t, distance, sector)
        if not h:
            self._restart(beacon_id, [sample])
            return GhostDecision(True, "reacquired" if reset else "first", reset)
        ref = statistics.median(d for _, d, _ in h)
        bound = speed * (t - h[0][0]) + 3.0 * self.sigma_d + self.slack
        if abs(distance - ref) <= bound:
            h.append(sample)
            self.rejected[beacon_id].clear()
            return GhostDecision(True, "ok")
        run = self.rejected[beacon_id]
        run.append(sample)
        if len(run) == self.window:
            ds = [d for _, d, _ in run]
            if max(ds) - min(ds) <= speed * (t - run[0][0]) + 2.0 * (3.0 * self.sigma_d + self.slack):
                self._restart(beacon_id, list(run))
                return GhostDecision(True, "relock", True)
        jump = abs(sector - h[-1][2]) >= self.sector_jump
        return GhostDecision(False, "variance+angle" if jump else "variance")

    def _restart(self, beacon_id, samples):
        self.hist[beacon_id] = deque(samples, maxlen=self.window)
        self.rejected[beacon_id] = deque(maxlen=self.window)


def ghost_filter(cycles, speed_bound, sigma_d, window=5, sector_jump=2, slack=0.0):
    """Batch form: ``{cycle_id: {beacon_id: GhostDecision}}`` over a cycle history."""
    gf = GhostFilter(sigma_d, window, sector_jump, slack=slack)
    out = {}
    for cyc in cycles:
        out[cyc.cycle_id] = {}
        for bid in sorted(cyc.records):
            r = cyc.records[bid]
            out[cyc.cycle_id][bid] = gf.check(bid, cyc.emit_time, r.measured_distance, r.transducer_index,
                                              speed_bound)
    return out


# -- measurement cycle -------------------------------------------------------


@dataclass
class BeaconRecord:
    cycle_id: int
    beacon_id: str
    emit_time: float
    tof: float  # reported, latency-calibrated
    transducer_index: int
    emitter_index: int
    path_kind: str  # direct, reflected, or ghost (an earlier burst)
    origin_cycle: int
    measured_distance: float  # apothem-corrected slant range
    detect_time: float
    report_time: float | None = None
    distance: float | None = None  # what the solver uses: filtered, or held over a rejection
    accepted: bool = True
    reason: str = ""


@dataclass
class MeasurementCycle:
    cycle_id: int
    emit_time: float
    pose: Pose2
    expected: tuple
    records: dict = field(default_factory=dict)
    reported: set = field(default_factory=set)
    last_report_time: float | None = None
    period: float | None = None
    fix: object = None
    fix_error: float | None = None
    fix_failure: str = ""

    @property
    def all_reported(self):
        return set(self.expected) <= self.reported


class Odometry:
    """Piecewise-linear robot trajectory through timed waypoints."""

    def __init__(self, waypoints):
        self.wp = list(waypoints)

    def pose(self, t):
        wp = self.wp
        if t <= wp[0].t or len(wp) == 1:
            w = wp[0]
            return Pose2(w.x, w.y, math.radians(w.heading_deg))
        for a, b in zip(wp, wp[1:]):
            if t <= b.t:
                f = (t - a.t) / (b.t - a.t)
                dh = (b.heading_deg - a.heading_deg + 180.0) % 360.0 - 180.0
                return Pose2(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), math.radians(a.heading_deg + f * dh))
        w = wp[-1]
        return Pose2(w.x, w.y, math.radians(w.heading_deg))

    def segment_speeds(self):
        return [(a.t, b.t, math.hypot(b.x - a.x, b.y - a.y) / (b.t - a.t)) for a, b in zip(self.wp, self.wp[1:])]

    def max_speed(self, t0, t1):
        best = 0.0
        for a, b, v in self.segment_speeds():
            if a < t1 and b > t0:
                best = max(best, v)
        return best


class SimulationResult(NamedTuple):
    cycles: list
    trace: list
    beacons: dict
    warnings: list


class Simulator:
    """Single-robot measurement loop over one scenario."""

    def __init__(self, scenario, pacing=None, seed=None, max_order=None, pose=None, filter_kind=None,
                 filter_params=None, ghost=None, solve=True, three_d=False):
        from .filters import make_filter

        self.sc = scenario
        self.pacing = pacing or scenario.pacing
        self.seed = scenario.seed if seed is None else seed
        self.max_order = scenario.max_order if max_order is None else max_order
        self.static_pose = pose
        self.solve = solve
        self.three_d = three_d
        self.air = scenario.air_model
        self.c = self.air.sound_speed
        self.noise = scenario.noise_model
        self.rf = scenario.rf_model
        self.room = scenario.room_polygon
        self.guard = attenuation_guard(scenario.max_range, self.c)
        self.profile = PowerProfile()
        self.odo = Odometry(scenario.robot.path)
        self.rng_noise = make_rng(self.seed, 1)
        self.rng_rf = make_rng(self.seed, 2)
        self.rng_miss = make_rng(self.seed, 3)
        self.rng_phase = make_rng(self.seed, 4)
        use_ghost = scenario.ghost.enabled if ghost is None else ghost
        self.ghost = GhostFilter(scenario.ghost_sigma, scenario.ghost.window, scenario.ghost.sector_jump,
                                 scenario.ghost.reset_after_s, scenario.ghost_slack) if use_ghost else None
        kind = filter_kind or scenario.filter.kind
        params = scenario.filter.params if filter_params is None and filter_kind is None else (filter_params or {})
        self.filters = {b.id: make_filter(kind, **params) for b in scenario.beacons}
        self.beacon_cfg = {b.id: b for b in scenario.beacons}
        self.receivers = {}
        for b in scenario.beacons:
            self.receivers[b.id] = Receiver(b.id, build_ring(scenario.beacon_ring(b)),
                                            scenario.transducer(b.transducer).range_m, b.height_m)
        self.states = {b.id: BeaconState(b.id) for b in scenario.beacons}
        self.lowpower = {}
        self.q = EventQueue()
        self.trace = []
        self.cycles = []
        self.warnings = []
        self.radio_free = 0.0
        self.emit_token = 0
        self.previous_fix = None
        self.held = {}

    # -- helpers ---------------------------------------------------------

    def pose_at(self, t):
        return Pose2(*self.static_pose) if self.static_pose is not None else self.odo.pose(t)

    def log(self, t, entity, event, detail=""):
        self.trace.append((t, entity, event, detail))

    def _check_path(self):
        room = self.room
        for i, w in enumerate(self.sc.robot.path):
            if not room.contains((w.x, w.y)):
                self.warnings.append(f"waypoint {i} at ({w.x}, {w.y}) lies outside the room")
        for a, b, v in self.odo.segment_speeds():
            if v > self.sc.robot.speed_bound_mps + 1e-9:
                self.warnings.append(f"segment {a:g}-{b:g}s needs {v:.3f} m/s, above the speed bound")

    # -- event handlers ----------------------------------------------------

    def _emit(self, t, k):
        pose = self.pose_at(t)
        awake = [bid for bid in self.receivers if bid not in self.lowpower or self.lowpower[bid].awake]
        cyc = MeasurementCycle(k, t, pose, tuple(awake))
        self.cycles.append(cyc)
        self.log(t, "robot", "emit", f"cycle={k} x={pose.x:.4f} y={pose.y:.4f}")
        for bid in self.receivers:
            lat = self.rf.draw(self.rng_rf)
            if bid in awake:
                self.q.push(t + lat, "sync_rx", beacon=bid, cycle=k)
                if bid in self.lowpower:
                    self.lowpower[bid].activity(t)
        emitters = build_ring(self.sc.robot_ring(pose))
        rxs = [self.receivers[bid] for bid in sorted(self.receivers)]
        arrivals = propagate(emitters, rxs, self.room, self.air, self.max_order, self.sc.robot.height_m)
        groups = {}
        for a in arrivals:
            key = (a.beacon_id, a.path, a.wall)
            if key not in groups:
                groups[key] = a
        for bid in sorted(self.receivers):
            missed = self.rng_miss.random() < self.noise.miss_rate
            for key in sorted((g for g in groups if g[0] == bid), key=lambda g: (g[1], -1 if g[2] is None else g[2])):
                a = groups[key]
                tof = apply_noise(a.tof, self.noise, self.rng_noise, self.c)
                if missed and a.path == "direct":
                    continue
                self.q.push(t + tof, "us_arrival", beacon=bid, cycle=k, arrival=a)
        self.emit_token += 1
        self.q.push(t + self.guard, "emit", cycle=k + 1, token=self.emit_token)

    def _sync_rx(self, t, bid, k):
        st = self.states[bid]
        if bid in self.lowpower and not self.lowpower[bid].awake:
            return
        st.set_mode("timing", t, self.profile)
        st.timer_start = t
        st.cycle = k
        st.detected = None
        self.q.push(t + self.guard, "timeout", beacon=bid, cycle=k)

    def _arrival(self, t, bid, k_origin, a):
        st = self.states[bid]
        if st.mode != "timing" or st.detected is not None:
            return
        k = st.cycle
        measured = t - st.timer_start
        tof = measured + self.rf.nominal
        st.detected = (tof, a.transducer_index)
        st.set_mode("reporting", t, self.profile)
        kind = a.path if k_origin == k else "ghost"
        rec = BeaconRecord(k, bid, self.cycles[k].emit_time, tof, a.transducer_index, a.emitter_index, kind,
                           k_origin, self._correct(tof, bid, a), t)
        start = max(t, self.radio_free)
        self.radio_free = start + self.rf.report_latency
        self.log(t, bid, "detect", f"cycle={k} tof={tof:.9f} idx={a.transducer_index} path={kind}")
        self.q.push(self.radio_free, "report_rx", beacon=bid, record=rec)

    def _correct(self, tof, bid, a):
        """Slant range between ring centres, with the apothems added in the horizontal plane."""
        b = self.beacon_cfg[bid]
        dh2 = (b.height_m - self.sc.robot.height_m) ** 2
        slant = tof * self.c
        planar = math.sqrt(max(slant * slant - dh2, 0.0))
        planar += a.emitter_apothem + a.receiver_apothem
        return math.sqrt(planar * planar + dh2)

    def _report(self, t, bid, rec):
        st = self.states[bid]
        if st.mode == "reporting" and st.cycle == rec.cycle_id:
            st.set_mode("armed", t, self.profile)
        cyc = self.cycles[rec.cycle_id]
        if cyc.period is not None:
            self.log(t, bid, "late_report", f"cycle={rec.cycle_id}")
            return
        rec.report_time = t
        cyc.records[bid] = rec
        cyc.reported.add(bid)
        cyc.last_report_time = t
        self.log(t, "robot", "report_rx", f"cycle={rec.cycle_id} beacon={bid}")
        if self.pacing == "ack_gated" and cyc.all_reported and cyc.expected:
            nxt = min(t + self.rf.overhead, cyc.emit_time + self.guard)
            self.emit_token += 1
            self.q.push(nxt, "emit", cycle=rec.cycle_id + 1, token=self.emit_token)

    def _timeout(self, t, bid, k):
        st = self.states[bid]
        if st.mode == "timing" and st.cycle == k:
            st.set_mode("armed", t, self.profile)
            self.log(t, bid, "timeout", f"cycle={k}")

    # -- robot-side processing ------------------------------------------------

    def _close(self, cyc, t):
        from .solver import SolverError, fix_pipeline

        cyc.period = t - cyc.emit_time
        speed = 0.0
        for bid in sorted(cyc.records):
            r = cyc.records[bid]
            if self.ghost is not None:
                hist = self.ghost.hist.get(bid)
                t0 = hist[0][0] if hist else cyc.emit_time
                speed = 0.0 if self.static_pose is not None else self.odo.max_speed(t0, cyc.emit_time)
                dec = self.ghost.check(bid, cyc.emit_time, r.measured_distance, r.transducer_index, speed)
                r.accepted, r.reason = dec.accepted, dec.reason
                if dec.reset:
                    self.filters[bid].reset()
                if dec.reset:
                    self.held.pop(bid, None)
                if not dec.accepted:
                    # the solver falls back on the last good estimate
                    r.distance = self.held.get(bid)
                    self.log(t, "robot", "reject", f"cycle={cyc.cycle_id} beacon={bid} {dec.reason}")
                    continue
            r.distance = self.held[bid] = self.filters[bid].step(r.measured_distance)
        if not self.solve:
            return
        try:
            fix = fix_pipeline(cyc, self.sc, self.previous_fix, three_d=self.three_d)
        except SolverError as exc:
            cyc.fix_failure = type(exc).__name__
            self.log(t, "robot", "no_fix", f"cycle={cyc.cycle_id} {type(exc).__name__}")
            return
        cyc.fix = fix
        self.previous_fix = fix.position
        cyc.fix_error = math.hypot(fix.position[0] - cyc.pose.x, fix.position[1] - cyc.pose.y)
        self.log(t, "robot", "fix", f"cycle={cyc.cycle_id} x={fix.position[0]:.6f} y={fix.position[1]:.6f}")

    # -- driver --------------------------------------------------------------

    def run(self, n_cycles=None, duration=None):
        if n_cycles is None and duration is None:
            raise ValueError("give n_cycles or duration")
        self._check_path()
        low = [b.id for b in self.sc.beacons if b.low_power]
        for bid in low:
            phase = float(self.rng_phase.random()) * 5.0
            lp = LowPowerBeacon(self.states[bid], phase=phase, profile=self.profile)
            self.lowpower[bid] = lp
            lp.start(self.q, self.trace)
            lp.hear(WakeBroadcast(0.0, tuple(low), 5.0))
        if low:
            self.log(0.0, "robot", "wake_broadcast", ",".join(low))
        self.q.push(0.0, "emit", cycle=0, token=0)
        end = 0.0
        while len(self.q):
            t, kind, p = self.q.pop()
            if kind == "emit":
                if p["token"] != self.emit_token or p["cycle"] != len(self.cycles):
                    continue
                if self.cycles:
                    self._close(self.cycles[-1], t)
                done = (n_cycles is not None and len(self.cycles) >= n_cycles) or \
                       (duration is not None and t > duration)
                if done:
                    end = t
                    break
                self._emit(t, p["cycle"])
            elif kind == "sync_rx":
                self._sync_rx(t, p["beacon"], p["cycle"])
            elif kind == "us_arrival":
                self._arrival(t, p["beacon"], p["cycle"], p["arrival"])
            elif kind == "report_rx":
                self._report(t, p["beacon"], p["record"])
            elif kind == "timeout":
                self._timeout(t, p["beacon"], p["cycle"])
            elif kind.startswith("lp_"):
                self.lowpower[p["beacon"]].on_event(kind, t, p, self.q, self.trace)
        for st in self.states.values():
            st.settle(end, self.profile)
        self.trace.sort(key=lambda r: r[0])
        return SimulationResult(self.cycles, self.trace, self.states, self.warnings)


def run_cycle(scenario, pose, pacing=None, **kw):
    """One isolated measurement cycle with the robot held at ``pose``."""
    sim = Simulator(scenario, pacing=pacing, pose=pose, **kw)
    return sim.run(n_cycles=1).cycles[0]


def cycle_rate(cycles):
    periods = [c.period for c in cycles if c.period is not None]
    return len(periods) / sum(periods) if periods else 0.0


def emission_times(cycle):
    return {bid: r.emit_time for bid, r in cycle.records.items()}


def energy_check(state, profile=None):
    """``sum(duration * current)`` over modes, in mAh; equals ``state.energy_used``."""
    profile = profile or PowerProfile()
    return sum(profile.mode_current(m) * d for m, d in state.durations.items()) / 3600.0


def fix_errors(cycles):
    return np.array([c.fix_error for c in cycles if c.fix_error is not None])
