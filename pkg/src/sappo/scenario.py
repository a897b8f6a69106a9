"""Scenario files: a versioned YAML document describing one deployment.

Every section is optional except ``room`` and ``beacons``; missing fields take
the defaults below.  Validation errors name the offending field and, when the
document came from text, its line.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import yaml

from .channel import AirModel, NoiseModel, RfModel
from .coverage import BeaconSector
from .geometry import GeometryError, Room
from .ring import DEFAULT_BEACON_APOTHEM, PolygonRing, Pose2, beacon_array, side_from_apothem

SCHEMA_VERSION = 1
PACINGS = ("attenuation_wait", "ack_gated")


class ScenarioError(ValueError):
    def __init__(self, path, message, line=None):
        self.path = path
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{path}: {message}")


@dataclass
class TransducerClass:
    range_m: float = 9.0
    aperture_deg: float = 30.0


@dataclass
class BeaconConfig:
    id: str
    position: tuple
    orientation_deg: float = 0.0
    n_transducers: int = 4
    arc_deg: float = 90.0
    low_power: bool = False
    height_m: float = 1.70
    transducer: str = "cheap"
    apothem_m: float = DEFAULT_BEACON_APOTHEM


@dataclass
class Waypoint:
    t: float
    x: float
    y: float
    heading_deg: float = 0.0


@dataclass
class RingConfig:
    n_sides: int = 12
    side_m: float = round(side_from_apothem(0.03, 12), 9)
    gap_m: float = 0.0


@dataclass
class RobotConfig:
    ring: RingConfig = field(default_factory=RingConfig)
    height_m: float = 1.45
    transducer: str = "cheap"
    path: list = field(default_factory=lambda: [Waypoint(0.0, 2.25, 4.0, 90.0)])
    speed_bound_mps: float = 0.5


@dataclass
class NoiseConfig:
    tof_sigma_s: float = 25e-6
    outlier_rate: float = 0.10
    outlier_cm_range: tuple = (1.0, 5.0)
    miss_rate: float = 0.0


@dataclass
class RfConfig:
    sync_kind: str = "simple_ook"
    ook_latency_s: float = 5e-6
    packet_latency_s: tuple = (50e-6, 500e-6)
    report_latency_s: float = 0.6e-3
    overhead_s: float = 0.5e-3


@dataclass
class GhostConfig:
    enabled: bool = True
    sigma_m: float | None = None  # defaults to the ToF jitter expressed in metres
    window: int = 5
    sector_jump: int = 2
    reset_after_s: float = 2.0
    slack_m: float | None = None  # extra allowance; defaults to the largest late-detection excess


@dataclass
class FilterConfig:
    kind: str = "ema"
    params: dict = field(default_factory=lambda: {"alpha": 0.1})


@dataclass
class Scenario:
    room: list
    beacons: list
    schema_version: int = SCHEMA_VERSION
    name: str = "scenario"
    air: dict = field(default_factory=lambda: {"temperature_c": 20.0, "humidity": None})
    transducers: dict = field(default_factory=lambda: {
        "cheap": TransducerClass(9.0, 30.0),
        "mid": TransducerClass(12.0, 30.0),
        "premium": TransducerClass(14.0, 30.0),
    })
    robot: RobotConfig = field(default_factory=RobotConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    rf: RfConfig = field(default_factory=RfConfig)
    max_order: int = 1
    pacing: str = "attenuation_wait"
    ghost: GhostConfig = field(default_factory=GhostConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    seed: int = 1

    # derived views -------------------------------------------------------

    @property
    def room_polygon(self):
        if "_room" not in self.__dict__:
            self.__dict__["_room"] = Room(self.room)
        return self.__dict__["_room"]

    def beacon(self, beacon_id):
        for b in self.beacons:
            if b.id == beacon_id:
                return b
        raise KeyError(beacon_id)

    def transducer(self, name):
        return self.transducers[name]

    @property
    def air_model(self):
        return AirModel(self.air.get("temperature_c", 20.0), self.air.get("humidity"))

    @property
    def noise_model(self):
        lo, hi = self.noise.outlier_cm_range
        return NoiseModel(self.noise.tof_sigma_s, self.noise.outlier_rate, (lo / 100.0, hi / 100.0),
                          self.noise.miss_rate)

    @property
    def rf_model(self):
        return RfModel(self.rf.sync_kind, self.rf.ook_latency_s, tuple(self.rf.packet_latency_s),
                       self.rf.report_latency_s, self.rf.overhead_s)

    def beacon_ring(self, b):
        cls = self.transducer(b.transducer)
        return beacon_array(Pose2(b.position[0], b.position[1], math.radians(b.orientation_deg)),
                            arc=math.radians(b.arc_deg), n_transducers=b.n_transducers,
                            apothem_m=b.apothem_m, aperture=math.radians(cls.aperture_deg))

    def robot_ring(self, pose=Pose2(0.0, 0.0, 0.0)):
        r = self.robot.ring
        cls = self.transducer(self.robot.transducer)
        return PolygonRing(r.n_sides, r.side_m, split_gap=r.gap_m, pose=Pose2(*pose),
                           aperture=math.radians(cls.aperture_deg))

    def sectors(self):
        return [BeaconSector(b.position[0], b.position[1], math.radians(b.orientation_deg),
                             math.radians(b.arc_deg), self.transducer(b.transducer).range_m)
                for b in self.beacons]

    @property
    def max_range(self):
        return max([self.transducer(b.transducer).range_m for b in self.beacons]
                   + [self.transducer(self.robot.transducer).range_m])

    @property
    def ghost_sigma(self):
        if self.ghost.sigma_m is not None:
            return self.ghost.sigma_m
        return self.noise.tof_sigma_s * self.air_model.sound_speed

    @property
    def ghost_slack(self):
        if self.ghost.slack_m is not None:
            return self.ghost.slack_m
        return self.noise.outlier_cm_range[1] / 100.0 if self.noise.outlier_rate > 0 else 0.0

    def to_dict(self):
        d = asdict(self)
        d.pop("_room", None)
        order = ["schema_version", "name", "seed", "room", "air", "transducers", "beacons", "robot",
                 "noise", "rf", "max_order", "pacing", "ghost", "filter"]
        return {k: _plain(d[k]) for k in order}

    def dumps(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


# -- defaults -------------------------------------------------------------


def annex_room_scenario():
    """The 4.5 m x 11.5 m test room with two cheap 90 degree beacons in the
    corners of one short wall, looking diagonally into the room."""
    return Scenario(
        name="annex-room",
        room=[[0.0, 0.0], [4.5, 0.0], [4.5, 11.5], [0.0, 11.5]],
        beacons=[
            BeaconConfig("B1", (0.0, 0.0), 45.0),
            BeaconConfig("B2", (4.5, 0.0), 135.0),
        ],
        robot=RobotConfig(path=[Waypoint(0.0, 2.25, 4.0, 90.0)]),
    )


default_scenario = annex_room_scenario


# -- loading ----------------------------------------------------------------


class _Lines:
    """Map dotted field paths to source lines using the YAML node tree."""

    def __init__(self, text):
        self.node = None
        if text is not None:
            try:
                self.node = yaml.compose(text)
            except yaml.YAMLError:
                self.node = None

    def line(self, path):
        node = self.node
        if node is None:
            return None
        best = node.start_mark.line + 1
        for part in path.split("."):
            nxt = None
            if isinstance(node, yaml.MappingNode):
                for k, v in node.value:
                    if k.value == part:
                        nxt = v
                        best = k.start_mark.line + 1
                        break
            elif isinstance(node, yaml.SequenceNode) and part.isdigit() and int(part) < len(node.value):
                nxt = node.value[int(part)]
                best = nxt.start_mark.line + 1
            if nxt is None:
                break
            node = nxt
        return best


class _Reader:
    def __init__(self, lines):
        self.lines = lines

    def fail(self, path, msg):
        raise ScenarioError(path, msg, self.lines.line(path))

    def section(self, data, path, allowed):
        if data is None:
            return {}
        if not isinstance(data, dict):
            self.fail(path, "expected a mapping")
        extra = sorted(set(data) - set(allowed))
        if extra:
            self.fail(f"{path}.{extra[0]}" if path else extra[0], "unknown field")
        return data

    def num(self, data, key, path, default, lo=None, hi=None, positive=False, integer=False):
        p = f"{path}.{key}" if path else key
        v = data.get(key, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(p, f"expected a number, got {v!r}")
        if integer and int(v) != v:
            self.fail(p, f"expected an integer, got {v!r}")
        if not math.isfinite(v):
            self.fail(p, "must be finite")
        if positive and v <= 0:
            self.fail(p, f"must be positive, got {v!r}")
        if lo is not None and v < lo:
            self.fail(p, f"must be >= {lo}, got {v!r}")
        if hi is not None and v > hi:
            self.fail(p, f"must be <= {hi}, got {v!r}")
        return int(v) if integer else float(v)

    def pair(self, data, key, path, default):
        p = f"{path}.{key}" if path else key
        v = data.get(key, default)
        if not isinstance(v, (list, tuple)) or len(v) != 2:
            self.fail(p, "expected a two-element list")
        for x in v:
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                self.fail(p, f"expected numbers, got {v!r}")
        return (float(v[0]), float(v[1]))

    def choice(self, data, key, path, default, options):
        p = f"{path}.{key}" if path else key
        v = data.get(key, default)
        if v not in options:
            self.fail(p, f"expected one of {list(options)}, got {v!r}")
        return v


def loads(text):
    """Parse and validate scenario text."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioError("<document>", f"malformed YAML: {getattr(exc, 'problem', exc)}",
                            mark.line + 1 if mark else None) from None
    return from_dict(data, _Lines(text))


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def from_dict(data, lines=None):
    rd = _Reader(lines or _Lines(None))
    top = {f.name for f in fields(Scenario)}
    data = rd.section(data, "", top)
    if not data:
        rd.fail("<document>", "empty scenario")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        rd.fail("schema_version", f"unsupported version {version!r}; this build reads {SCHEMA_VERSION}")

    if "room" not in data:
        rd.fail("room", "missing required field")
    room = data["room"]
    if not isinstance(room, list) or len(room) < 3:
        rd.fail("room", "expected a list of at least three [x, y] vertices")
    verts = [list(rd.pair({"v": v}, "v", f"room.{i}", None)) for i, v in enumerate(room)]
    try:
        Room(verts)
    except GeometryError as exc:
        rd.fail("room", str(exc))

    air = rd.section(data.get("air"), "air", ("temperature_c", "humidity"))
    temp = rd.num(air, "temperature_c", "air", 20.0, lo=-40.0, hi=60.0)
    hum = air.get("humidity")
    if hum is not None:
        hum = rd.num(air, "humidity", "air", None, lo=0.0, hi=100.0)

    tclasses = Scenario(room=[], beacons=[]).transducers
    raw_t = data.get("transducers")
    if raw_t is not None:
        if not isinstance(raw_t, dict) or not raw_t:
            rd.fail("transducers", "expected a mapping of class name to parameters")
        tclasses = {}
        for name, spec in raw_t.items():
            p = f"transducers.{name}"
            spec = rd.section(spec, p, ("range_m", "aperture_deg"))
            tclasses[str(name)] = TransducerClass(rd.num(spec, "range_m", p, 9.0, positive=True),
                                                  rd.num(spec, "aperture_deg", p, 30.0, lo=1.0, hi=179.0))

    if "beacons" not in data:
        rd.fail("beacons", "missing required field")
    raw_b = data["beacons"]
    if raw_b is None:
        raw_b = []
    if not isinstance(raw_b, list):
        rd.fail("beacons", "expected a list")
    beacons = []
    seen = set()
    bfields = [f.name for f in fields(BeaconConfig)]
    for i, b in enumerate(raw_b):
        p = f"beacons.{i}"
        b = rd.section(b, p, bfields)
        if "id" not in b or b["id"] is None:
            rd.fail(f"{p}.id", "missing required field")
        bid = str(b["id"])
        if bid in seen:
            rd.fail(f"{p}.id", f"duplicate beacon id {bid!r}")
        seen.add(bid)
        if "position" not in b:
            rd.fail(f"{p}.position", "missing required field")
        tname = b.get("transducer", "cheap")
        if tname not in tclasses:
            rd.fail(f"{p}.transducer", f"unknown transducer class {tname!r}")
        low = b.get("low_power", False)
        if not isinstance(low, bool):
            rd.fail(f"{p}.low_power", "expected true or false")
        arc = rd.num(b, "arc_deg", p, 90.0, lo=45.0, hi=360.0)
        n_t = rd.num(b, "n_transducers", p, 4, integer=True, lo=1)
        n_active = max(1, round(arc / 45.0))
        if n_t % n_active:
            rd.fail(f"{p}.n_transducers", f"{n_t} transducers cannot spread evenly over {n_active} side(s)")
        beacons.append(BeaconConfig(
            id=bid,
            position=rd.pair(b, "position", p, None),
            orientation_deg=rd.num(b, "orientation_deg", p, 0.0),
            n_transducers=n_t,
            arc_deg=arc,
            low_power=low,
            height_m=rd.num(b, "height_m", p, 1.70, positive=True),
            transducer=tname,
            apothem_m=rd.num(b, "apothem_m", p, DEFAULT_BEACON_APOTHEM, positive=True),
        ))

    robot = _read_robot(rd, data.get("robot"), tclasses)

    nz = rd.section(data.get("noise"), "noise", [f.name for f in fields(NoiseConfig)])
    noise = NoiseConfig(
        tof_sigma_s=rd.num(nz, "tof_sigma_s", "noise", 25e-6, lo=0.0),
        outlier_rate=rd.num(nz, "outlier_rate", "noise", 0.10, lo=0.0, hi=1.0),
        outlier_cm_range=rd.pair(nz, "outlier_cm_range", "noise", (1.0, 5.0)),
        miss_rate=rd.num(nz, "miss_rate", "noise", 0.0, lo=0.0, hi=1.0),
    )
    if not 0 <= noise.outlier_cm_range[0] <= noise.outlier_cm_range[1]:
        rd.fail("noise.outlier_cm_range", "expected an ordered non-negative range")

    rf_ = rd.section(data.get("rf"), "rf", [f.name for f in fields(RfConfig)])
    rf = RfConfig(
        sync_kind=rd.choice(rf_, "sync_kind", "rf", "simple_ook", ("simple_ook", "packet_radio")),
        ook_latency_s=rd.num(rf_, "ook_latency_s", "rf", 5e-6, lo=0.0),
        packet_latency_s=rd.pair(rf_, "packet_latency_s", "rf", (50e-6, 500e-6)),
        report_latency_s=rd.num(rf_, "report_latency_s", "rf", 0.6e-3, lo=0.0),
        overhead_s=rd.num(rf_, "overhead_s", "rf", 0.5e-3, lo=0.0),
    )

    gh = rd.section(data.get("ghost"), "ghost", [f.name for f in fields(GhostConfig)])
    enabled = gh.get("enabled", True)
    if not isinstance(enabled, bool):
        rd.fail("ghost.enabled", "expected true or false")
    sigma = gh.get("sigma_m")
    ghost = GhostConfig(
        enabled=enabled,
        sigma_m=None if sigma is None else rd.num(gh, "sigma_m", "ghost", None, positive=True),
        window=rd.num(gh, "window", "ghost", 5, integer=True, lo=1),
        sector_jump=rd.num(gh, "sector_jump", "ghost", 2, integer=True, lo=1),
        reset_after_s=rd.num(gh, "reset_after_s", "ghost", 2.0, positive=True),
        slack_m=None if gh.get("slack_m") is None else rd.num(gh, "slack_m", "ghost", None, lo=0.0),
    )

    fl = rd.section(data.get("filter"), "filter", ("kind", "params"))
    kind = rd.choice(fl, "kind", "filter", "ema", ("none", "moving_average", "ema", "kalman"))
    params = fl.get("params", {} if "kind" in fl else {"alpha": 0.1})
    if params is None:
        params = {}
    if not isinstance(params, dict):
        rd.fail("filter.params", "expected a mapping")
    from .filters import make_filter

    try:
        make_filter(kind, **params)
    except (TypeError, ValueError) as exc:
        rd.fail("filter.params", str(exc))

    sc = Scenario(
        schema_version=SCHEMA_VERSION,
        name=str(data.get("name", "scenario")),
        room=verts,
        air={"temperature_c": temp, "humidity": hum},
        transducers=tclasses,
        beacons=beacons,
        robot=robot,
        noise=noise,
        rf=rf,
        max_order=rd.choice(data, "max_order", "", 1, (0, 1)),
        pacing=rd.choice(data, "pacing", "", "attenuation_wait", PACINGS),
        ghost=ghost,
        filter=FilterConfig(kind, dict(params)),
        seed=rd.num(data, "seed", "", 1, integer=True, lo=0),
    )
    for i, b in enumerate(sc.beacons):
        if not sc.room_polygon.contains(b.position, tol=1e-6):
            rd.fail(f"beacons.{i}.position", "beacon lies outside the room")
    return sc


def _read_robot(rd, data, tclasses):
    r = rd.section(data, "robot", [f.name for f in fields(RobotConfig)])
    ring = rd.section(r.get("ring"), "robot.ring", ("n_sides", "side_m", "apothem_m", "gap_m"))
    n = rd.num(ring, "n_sides", "robot.ring", 12, integer=True, lo=3)
    if "side_m" in ring and "apothem_m" in ring:
        rd.fail("robot.ring.apothem_m", "give side_m or apothem_m, not both")
    if "apothem_m" in ring:
        side = side_from_apothem(rd.num(ring, "apothem_m", "robot.ring", None, positive=True), n)
    else:
        side = rd.num(ring, "side_m", "robot.ring", side_from_apothem(0.03, n), positive=True)
    gap = rd.num(ring, "gap_m", "robot.ring", 0.0, lo=0.0)
    tname = r.get("transducer", "cheap")
    if tname not in tclasses:
        rd.fail("robot.transducer", f"unknown transducer class {tname!r}")
    raw_path = r.get("path", [{"t": 0.0, "x": 2.25, "y": 4.0, "heading_deg": 90.0}])
    if not isinstance(raw_path, list) or not raw_path:
        rd.fail("robot.path", "expected a non-empty list of waypoints")
    path = []
    for i, w in enumerate(raw_path):
        p = f"robot.path.{i}"
        w = rd.section(w, p, ("t", "x", "y", "heading_deg"))
        for key in ("t", "x", "y"):
            if key not in w:
                rd.fail(f"{p}.{key}", "missing required field")
        wp = Waypoint(rd.num(w, "t", p, None, lo=0.0), rd.num(w, "x", p, None), rd.num(w, "y", p, None),
                      rd.num(w, "heading_deg", p, 0.0))
        if path and wp.t <= path[-1].t:
            rd.fail(f"{p}.t", "waypoint times must increase")
        path.append(wp)
    return RobotConfig(
        ring=RingConfig(n, side, gap),
        height_m=rd.num(r, "height_m", "robot", 1.45, positive=True),
        transducer=tname,
        path=path,
        speed_bound_mps=rd.num(r, "speed_bound_mps", "robot", 0.5, lo=0.0),
    )
