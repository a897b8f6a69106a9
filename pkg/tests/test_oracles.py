"""Worked examples with hand-computed or closed-form answers."""

import dataclasses
import math

import numpy as np
import pytest

from conftest import place_robot
from sappo.channel import AirModel, NoiseModel, apply_noise, make_rng, sound_speed
from sappo.coverage import BeaconSector, coverage_map, covered_area
from sappo.filters import Ema, Kalman, MovingAverage, run
from sappo.geometry import Cone2, Room, disc_area, footprint_diameter, in_cone, lens_area, mirror_across_wall, \
    sector_area
from sappo.protocol import GhostFilter, WakeBroadcast, lowpower_session, next_cycle_delay, run_cycle, \
    PowerProfile, battery_life
from sappo.ring import apothem, circumradius_from_side, error_curve
from sappo.scenario import BeaconConfig
from sappo.solver import height_correct, trilaterate_canonical


@pytest.mark.parametrize("h, expected", [(2.5, 1.3397), (0.0, 0.0), (9.0, 4.823)])
def test_footprint_values(h, expected):
    assert footprint_diameter(h, math.radians(30)) == pytest.approx(expected, abs=5e-4)


@pytest.mark.parametrize("d, area", [(1.34, 1.410), (0.0, 0.0), (18.0, 254.47)])
def test_disc_values(d, area):
    assert disc_area(d) == pytest.approx(area, abs=5e-3)


def test_sector_and_lens_values():
    assert sector_area(9, 2 * math.pi) == pytest.approx(254.47, abs=5e-3)
    assert sector_area(9, 0.0) == 0.0
    assert lens_area(5, 10) == 0.0
    assert lens_area(5, 0) == pytest.approx(78.54, abs=5e-3)


def test_mirror_values():
    wall = ((0, 0), (10, 0))
    assert np.allclose(mirror_across_wall((1, 2), wall), (1, -2))
    assert np.allclose(mirror_across_wall((3, 0), wall), (3, 0))
    image = mirror_across_wall((1, 1), wall)
    assert math.dist(image, (4, 1)) == pytest.approx(3.606, abs=5e-4)


def test_cone_values():
    c = Cone2((0, 0), 0.0, math.radians(30), 9.0)
    assert in_cone(c, (3, 0))
    assert not in_cone(c, (math.cos(math.radians(16)), math.sin(math.radians(16))))
    assert not in_cone(c, (9.01, 0))


def test_polygon_values():
    assert circumradius_from_side(math.sqrt(2), 4) == pytest.approx(1.0)
    assert circumradius_from_side(1, 6) == pytest.approx(1.0)
    assert apothem(2, 4) == pytest.approx(1.0)


def test_zero_apothems_give_zero_error():
    rows = error_curve("angle", 4.0, np.radians([0, 5, 10, 15]), robot_apothem=1e-12, beacon_apothem=1e-12)
    assert max(abs(e) for _, e in rows) < 1e-9


def test_coverage_values():
    room = Room.rectangle(5, 9)
    big = [BeaconSector(2.5, 4.5, 0, 2 * math.pi, 50.0)]
    assert covered_area(coverage_map(room, big, 1, 1.0)) == pytest.approx(45.0)
    assert covered_area(coverage_map(room, [], 0, 1.0)) == pytest.approx(45.0)
    assert covered_area(coverage_map(room, [], 1, 1.0)) == 0.0


@pytest.mark.parametrize("t, c", [(20, 343.52), (0, 331.4), (25, 346.55)])
def test_sound_speed_values(t, c):
    assert sound_speed(t) == pytest.approx(c, abs=5e-3)


def test_ten_millisecond_flight():
    assert 3.435 / AirModel(20.0).sound_speed == pytest.approx(0.0100, abs=5e-6)


def test_noise_identity_and_fixed_outlier():
    rng = make_rng(0)
    assert apply_noise(0.01, NoiseModel(tof_sigma=0.0, outlier_rate=0.0), rng, 343.0) == 0.01
    fixed = NoiseModel(tof_sigma=0.0, outlier_rate=1.0, outlier_extra=(0.03, 0.03))
    assert apply_noise(0.01, fixed, rng, 343.0) == pytest.approx(0.01 + 0.03 / 343.0)


def test_canonical_trilateration_values():
    sols = trilaterate_canonical(math.sqrt(59), math.sqrt(59), math.sqrt(34), 10.0, 5.0, 10.0)
    assert sorted(tuple(np.round(s, 12)) for s in sols) == [(5.0, 5.0, -3.0), (5.0, 5.0, 3.0)]
    x = trilaterate_canonical(4.0, 4.0, 5.0, 6.0, 1.0, 4.0)[0][0]
    assert x == pytest.approx(3.0)


def test_rounding_radicand_gives_one_root():
    # point (3, 4, 0) seen from (0,0,0), (6,0,0), (0,8,0); r1 a hair short
    r1 = math.sqrt(25.0 - 1e-14)
    sols = trilaterate_canonical(r1, 5.0, 5.0, 6.0, 0.0, 8.0)
    assert len(sols) == 1 and sols[0][2] == 0.0


@pytest.mark.parametrize("slant, hb, he, planar", [(1.0, 1.70, 1.45, 0.96825), (2.0, 1.5, 1.5, 2.0),
                                                  (0.25, 1.70, 1.45, 0.0)])
def test_height_correction_values(slant, hb, he, planar):
    assert height_correct(slant, hb, he) == pytest.approx(planar, abs=5e-6)


def test_filter_degenerate_cases():
    xs = [3.0, -1.0, 7.5]
    assert run(Ema(1.0), xs) == xs
    assert run(MovingAverage(1), xs) == xs
    k = Kalman(r=1.0, q=0.0)
    ps = []
    for _ in range(50):
        k.step(2.0)
        ps.append(k.p)
    assert k.x == pytest.approx(2.0) and all(b < a for a, b in zip(ps, ps[1:]))
    frozen = Kalman(r=1e12, q=0.0, p0=1.0, x0=0.0)
    frozen.step(100.0)
    assert frozen.k < 1e-11 and abs(frozen.x) < 1e-9


def test_idle_current_life():
    assert battery_life(PowerProfile(battery_mah=2000), "idle_16MHz") == pytest.approx(166.7, abs=0.05)


def test_straggler_holds_the_ack_gated_cycle(scenario):
    sc = place_robot(scenario, 0.5, 0.5, heading_deg=45.0, max_order=0,
                     room=[[0, 0], [8, 0], [8, 8], [0, 8]],
                     beacons=[BeaconConfig("B1", (0.0, 0.0), 45.0), BeaconConfig("B2", (6.8, 6.78), 225.0)])
    c = run_cycle(sc, (0.5, 0.5, math.radians(45)), pacing="ack_gated")
    assert c.all_reported
    delay = next_cycle_delay("ack_gated", c, sc.max_range, sc.air_model.sound_speed, sc.rf.overhead_s)
    assert delay >= 0.0262


def test_ghost_gate_values():
    sigma = 25e-6 * 343.0
    g = GhostFilter(sigma)
    assert g.check("A", 0.0, 3.0, 1, 0.0).accepted  # first ever
    g.check("A", 0.05, 3.0, 1, 0.0)
    assert not g.check("A", 0.10, 3.4, 1, 0.0).accepted
    m = GhostFilter(sigma)
    m.check("A", 0.0, 3.0, 1, 0.5)
    assert m.check("A", 0.05, 3.025, 1, 0.5).accepted


def test_wake_within_one_quantum():
    for phase in np.linspace(0.0, 4.99, 11):
        tr = lowpower_session("N", [WakeBroadcast(0.0, ("N",), 5.0)], 20.0, phase=float(phase))
        assert tr.wake_times and tr.wake_times[0] <= 5.0


def test_noise_free_fix_within_ring_error(scenario):
    """Noise-free fixes: range error stays under 2.5 mm, fix error under 2.5 mm / sin(crossing angle)."""
    sc = dataclasses.replace(scenario, max_order=0,
                             noise=dataclasses.replace(scenario.noise, tof_sigma_s=0.0, outlier_rate=0.0))
    grid = coverage_map(sc.room_polygon, sc.sectors(), 2, 0.5)
    xs = grid.origin[0] + (np.arange(grid.counts.shape[1]) + 0.5) * 0.5
    ys = grid.origin[1] + (np.arange(grid.counts.shape[0]) + 0.5) * 0.5
    rng = np.random.default_rng(12)
    b1, b2 = (np.array(b.position) for b in sc.beacons)
    checked = 0
    for iy, ix in zip(*np.nonzero(grid.covered)):
        p = np.array([xs[ix], ys[iy]])
        c = run_cycle(sc, (p[0], p[1], rng.uniform(-math.pi, math.pi)))
        if c.fix is None:
            continue
        u, v = b1 - p, b2 - p
        sin_t = abs(u[0] * v[1] - u[1] * v[0]) / np.linalg.norm(u) / np.linalg.norm(v)
        assert c.fix_error * sin_t <= 2.5e-3
        if sin_t > 0.95:
            assert c.fix_error <= 2.5e-3
        checked += 1
    assert checked > 50
