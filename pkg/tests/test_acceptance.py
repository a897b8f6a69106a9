"""Acceptance checks.  Each criterion prints one PASS/FAIL line, even without ``-s``."""

import dataclasses
import math

import numpy as np
import pytest

from conftest import place_robot
from sappo import cli
from sappo.channel import NoiseModel, apply_noise, make_rng
from sappo.coverage import BeaconSector, coverage_map, covered_area
from sappo.filters import Ema, Kalman, MovingAverage, run
from sappo.geometry import Room, cone_triangle_area, disc_area, footprint_diameter, lens_area, sector_area
from sappo.protocol import (MIN_GUARD, PowerProfile, Simulator, attenuation_guard, battery_life, cycle_rate,
                            fix_errors, lowpower_duty)
from sappo.ring import error_curve
from sappo.scenario import default_scenario
from sappo.solver import RangeObservation, bilaterate2, height_correct, trilaterate3

SIGMA_D = 25e-6 * 343.0
MM_RANGE = 3 * SIGMA_D


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def test_c01_footprint(report):
    d = footprint_diameter(2.5, math.radians(30))
    a = disc_area(d)
    ok = abs(d / 1.34 - 1) <= 5e-3 and abs(a / 1.41 - 1) <= 5e-3
    report(1, ok, f"footprint {d:.4f} m, area {a:.4f} m2")


def test_c02_lens_and_grid(report):
    exact = (2 * math.pi / 3 - math.sqrt(3) / 2) * 81
    lens = lens_area(9, 9)
    room = Room.rectangle(30.0, 20.0, origin=(-10.0, -10.0))
    full = [BeaconSector(0, 0, 0, 2 * math.pi, 9.0), BeaconSector(9, 0, 0, 2 * math.pi, 9.0)]
    grid_full = covered_area(coverage_map(room, full, 2, 0.05))
    half_room = Room.rectangle(30.0, 10.0, origin=(-10.0, 0.0))
    half = [BeaconSector(0, 0, math.pi / 2, math.pi, 9.0), BeaconSector(9, 0, math.pi / 2, math.pi, 9.0)]
    grid_half = covered_area(coverage_map(half_room, half, 2, 0.05))
    ok = (math.isclose(lens, exact, rel_tol=1e-12)
          and abs(lens / 99.48 - 1) < 5e-4 and abs(lens / 2 / 49.74 - 1) < 5e-4
          and abs(grid_full / lens - 1) <= 0.01 and abs(grid_half / (lens / 2) - 1) <= 0.01)
    report(2, ok, f"lens {lens:.3f} m2, half {lens / 2:.3f} m2, grid {grid_full:.3f} / {grid_half:.3f} m2")


def test_c03_sector_and_triangle(report):
    s = sector_area(9, math.pi / 2)
    tri = cone_triangle_area(9, math.radians(30))
    # an 18 m2 triangle does not follow from the formula; the exact value is kept
    ok = abs(s / 63.62 - 1) <= 1e-3 and abs(tri - 21.70) < 0.01 and abs(tri - 18.0) > 1.0
    report(3, ok, f"sector {s:.3f} m2 (rounded 63.59), triangle {tri:.2f} m2 (an 18 m2 figure does not reproduce)")


def test_c04_annex_room_coverage(report, tmp_path):
    rows = cli.cmd_coverage(default_scenario(), 0.05, tmp_path)
    two = {k: a for k, a, _ in rows}[2]
    report(4, abs(two / 37.4 - 1) <= 0.10, f"covered with >=2 beacons: {two:.2f} m2")


def test_c05_noise_and_fix_accuracy(report):
    rng = make_rng(2024, 5)
    nm = NoiseModel(outlier_rate=0.0)
    d = np.array([apply_noise(0.0, nm, rng, 343.0) for _ in range(10_000)]) * 343.0
    std_ok = abs(d.std() / 8.575e-3 - 1) <= 0.05
    sc = default_scenario()
    raw = fix_errors(Simulator(sc, filter_kind="none").run(n_cycles=1000).cycles)
    fractions = {}
    for kind in ("moving_average", "ema", "kalman"):
        errs = fix_errors(Simulator(sc, filter_kind=kind, filter_params={}).run(n_cycles=1000).cycles)
        fractions[kind] = float(np.mean(errs < MM_RANGE))
    raw_frac = float(np.mean(raw < MM_RANGE))
    med = float(np.median(raw))
    ok = std_ok and med < MM_RANGE and 0.80 <= raw_frac < 0.99 and min(fractions.values()) >= 0.99
    detail = (f"range std {d.std() * 1e3:.3f} mm, median fix {med * 1e3:.2f} mm, within {MM_RANGE * 1e3:.1f} mm: "
              f"raw {raw_frac:.3f}, " + ", ".join(f"{k} {v:.3f}" for k, v in fractions.items()))
    report(5, ok, detail)


def test_c06_ring_error_curves(report):
    (_, e0), (_, e15) = error_curve("angle", 4.0, [0.0, math.radians(15)])
    rows = error_curve("distance", math.radians(15), np.arange(1.5, 9.01, 0.1))
    spread = max(e for _, e in rows) - min(e for _, e in rows)
    ok = abs(e0) < 1e-12 and abs(e15 - 2.0e-3) <= 0.3e-3 and spread <= 0.5e-3
    report(6, ok, f"error 0 deg {e0 * 1e3:.4f} mm, 15 deg {e15 * 1e3:.3f} mm, spread past 1.5 m {spread * 1e3:.4f} mm")


def test_c07_solver_round_trip(report):
    rng = np.random.default_rng(7)
    worst2 = worst3 = 0.0
    for _ in range(10_000):
        b = rng.uniform(-10, 10, size=(3, 2))
        hb = rng.uniform(1.0, 3.0, size=3)
        p = rng.uniform(-10, 10, size=2)
        he = rng.uniform(0.0, 1.0)
        slant = [math.hypot(math.dist(p, b[k]), hb[k] - he) for k in range(3)]
        planar = [RangeObservation(str(k), b[k], height_correct(slant[k], hb[k], he)) for k in range(2)]
        worst2 = max(worst2, min(math.dist(c, p) for c in bilaterate2(planar)))
        target = np.array([*p, he])
        spatial = [RangeObservation(str(k), (*b[k], hb[k]), float(np.linalg.norm(target - (*b[k], hb[k]))))
                   for k in range(3)]
        try:
            cands = trilaterate3(spatial)
        except ValueError:
            continue  # three nearly collinear beacons
        worst3 = max(worst3, min(float(np.linalg.norm(c - target)) for c in cands))
    report(7, worst2 < 1e-9 and worst3 < 1e-9, f"worst planar {worst2:.2e} m, worst spatial {worst3:.2e} m")


def test_c08_battery(report):
    years = battery_life(PowerProfile(battery_mah=2000), 0.03) / (24 * 365.25)
    months = battery_life(PowerProfile(battery_mah=2500), lowpower_duty()) / (24 * 30.44)
    report(8, years > 7 and abs(years - 7.6) < 0.1 and months >= 4,
           f"power-down {years:.2f} years, duty-cycled {months:.1f} months")


def test_c09_pacing(report):
    sc = default_scenario()
    grid = coverage_map(sc.room_polygon, sc.sectors(), 2, 0.25)
    xs = grid.origin[0] + (np.arange(grid.counts.shape[1]) + 0.5) * 0.25
    ys = grid.origin[1] + (np.arange(grid.counts.shape[0]) + 0.5) * 0.25
    iy, ix = np.nonzero(grid.covered)
    rng = np.random.default_rng(9)
    pick = rng.choice(len(ix), size=12, replace=False)
    strictly = True
    for k in pick:
        for order in (0, 1):
            s = place_robot(sc, float(xs[ix[k]]), float(ys[iy[k]]), max_order=order)
            slow = cycle_rate(Simulator(s, pacing="attenuation_wait", solve=False).run(n_cycles=60).cycles)
            fast = cycle_rate(Simulator(s, pacing="ack_gated", solve=False).run(n_cycles=60).cycles)
            strictly &= fast > slow
    near = place_robot(sc, 2.25, 1.5, max_order=0)
    slow = cycle_rate(Simulator(near, pacing="attenuation_wait", solve=False).run(n_cycles=100).cycles)
    fast = cycle_rate(Simulator(near, pacing="ack_gated", solve=False).run(n_cycles=100).cycles)
    guard = attenuation_guard(sc.max_range, sc.air_model.sound_speed)
    ok = strictly and fast >= 2 * slow and guard >= MIN_GUARD
    report(9, ok, f"ack_gated faster at all sampled poses: {strictly}; within 3 m {fast:.1f} vs {slow:.1f} Hz; "
                  f"guard {guard * 1e3:.1f} ms")


def test_c10_ghost_rejection(report):
    sc = default_scenario()
    worst_echo = worst_direct = 1.0
    for back in (0.5, 1.0, 2.0):
        s = place_robot(sc, 2.25, 4.0, room=[[0, 0], [4.5, 0], [4.5, 4.0 + back], [0, 4.0 + back]],
                        max_order=1, noise=dataclasses.replace(sc.noise, miss_rate=0.10))
        res = Simulator(s, solve=False).run(n_cycles=1000)
        recs = [r for c in res.cycles for r in c.records.values()]
        echoes = [r for r in recs if r.path_kind != "direct"]
        direct = [r for r in recs if r.path_kind == "direct"]
        worst_echo = min(worst_echo, np.mean([not r.accepted for r in echoes]))
        worst_direct = min(worst_direct, np.mean([r.accepted for r in direct]))
    report(10, worst_echo >= 0.95 and worst_direct >= 0.99,
           f"echoes rejected {worst_echo:.3f}, direct accepted {worst_direct:.3f} (worst over wall distances)")


def test_c11_determinism(report, tmp_path):
    sc = default_scenario()
    outs = []
    for name in ("a", "b"):
        cli.cmd_simulate(sc, tmp_path / name, n_cycles=300)
        outs.append({f: (tmp_path / name / f).read_bytes()
                     for f in ("trace.csv", "cycles.csv", "fixes.csv", "summary.json")})
    report(11, outs[0] == outs[1], f"{sum(len(v) for v in outs[0].values())} bytes identical across runs")


def test_c12_filter_oracles(report):
    k = Kalman(r=1.0, q=0.0, p0=1.0, x0=0.0)
    k.step(1.0)
    ema = run(Ema(0.5), [0, 10])
    ma = run(MovingAverage(3), [1, 2, 3, 4])
    ok = k.k == 0.5 and ema == [0, 5] and ma == [1, 1.5, 2, 3]
    report(12, ok, f"K={k.k}, EMA {ema}, MA {ma}")
