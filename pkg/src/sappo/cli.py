"""Command line: ``sappo {coverage,simulate,curves,validate}``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys

from . import curves as curves_mod
from . import simulate as simulate_mod
from .coverage import DEFAULT_CELL, summary_rows
from .scenario import ScenarioError, default_scenario, load

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_SIM = 3


def _scenario(path, seed):
    sc = default_scenario() if path is None else load(path)
    if seed is not None:
        sc = dataclasses.replace(sc, seed=seed)
    return sc


def cmd_coverage(scenario, cell_size, out):
    """Write coverage.pgm and coverage.csv; return the summary rows."""
    os.makedirs(out, exist_ok=True)
    rows, grid = summary_rows(scenario.room_polygon, scenario.sectors(), cell_size)
    with open(os.path.join(out, "coverage.pgm"), "wb") as fh:
        fh.write(grid.to_pgm())
    with open(os.path.join(out, "coverage.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("min_beacons", "covered_m2", "room_m2", "fraction"))
        for k, area, room in rows:
            w.writerow((k, f"{area:.4f}", f"{room:.4f}", f"{area / room:.6f}"))
    return rows


def cmd_simulate(scenario, out, n_cycles=None, duration=None, three_d=False):
    if n_cycles is None and duration is None:
        n_cycles = 1000
    result, summary = simulate_mod.run(scenario, n_cycles=n_cycles, duration=duration, three_d=three_d)
    simulate_mod.write_outputs(result, summary, out, three_d=three_d)
    return summary


def cmd_curves(kind, out, svg=False, **params):
    os.makedirs(out, exist_ok=True)
    header, rows = curves_mod.compute(kind, **params)
    path = os.path.join(out, f"{kind}.csv")
    curves_mod.write_csv(path, header, rows)
    if svg:
        with open(os.path.join(out, f"{kind}.svg"), "w", encoding="utf-8") as fh:
            fh.write(curves_mod.svg(header, rows))
    return path


def build_parser():
    p = argparse.ArgumentParser(prog="sappo", description="Ultrasonic beacon positioning simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("scenario", nargs="?", help="scenario YAML (default: built-in annex room)")
            sp.add_argument("--seed", type=int, help="override the scenario seed")
        sp.add_argument("--out", default="out", help="output directory")

    c = sub.add_parser("coverage", help="coverage map and covered area")
    common(c)
    c.add_argument("--cell-size", type=float, default=DEFAULT_CELL)

    s = sub.add_parser("simulate", help="run measurement cycles")
    common(s)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--cycles", type=int)
    g.add_argument("--duration", type=float, help="simulated seconds")
    s.add_argument("--pacing", choices=("attenuation_wait", "ack_gated"))
    s.add_argument("--3d", dest="three_d", action="store_true", help="trilaterate with three or more beacons")

    k = sub.add_parser("curves", help="ring error and filter response curves")
    common(k, scenario=False)
    k.add_argument("kind", choices=curves_mod.CURVES)
    k.add_argument("--distance", type=float, help="centre distance for error_angle (m)")
    k.add_argument("--angle", type=float, help="orientation for error_distance (deg)")
    k.add_argument("--svg", action="store_true")

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("scenario")
    v.add_argument("--dump", action="store_true", help="print the normalised scenario")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            sc = load(args.scenario)
            print(sc.dumps() if args.dump else f"{args.scenario}: ok (schema_version {sc.schema_version})")
            return EXIT_OK
        if args.command == "curves":
            params = {}
            if args.distance is not None:
                params["distance"] = args.distance
            if args.angle is not None:
                params["angle_deg"] = args.angle
            print(cmd_curves(args.kind, args.out, args.svg, **params))
            return EXIT_OK
        sc = _scenario(args.scenario, args.seed)
    except ScenarioError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIM
    try:
        if args.command == "coverage":
            for k, area, room in cmd_coverage(sc, args.cell_size, args.out):
                print(f"min_beacons={k}: {area:.2f} m2 of {room:.2f} m2")
            return EXIT_OK
        if args.pacing:
            sc = dataclasses.replace(sc, pacing=args.pacing)
        summary = cmd_simulate(sc, args.out, args.cycles, args.duration, args.three_d)
    except ValueError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIM
    for w in summary["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    med = summary["median_fix_error_m"]
    print(f"{summary['cycles']} cycles at {summary['cycle_rate_hz']:.2f} Hz, {summary['fixes']} fixes, "
          f"median error {'n/a' if med is None else f'{med * 1000:.2f} mm'}, "
          f"{summary['ghost_rejections']} rejected ranges")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
