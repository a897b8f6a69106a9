"""End-to-end runs: simulate a scenario and write its trace, cycle and fix tables."""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from .protocol import Simulator, cycle_rate

TRACE_COLUMNS = ("time_s", "entity", "event", "detail")
CYCLE_COLUMNS = ("cycle_id", "beacon_id", "tof_s", "transducer_index", "accepted", "path_kind")
FIX_COLUMNS = ("cycle_id", "x", "y", "residual_m", "n_beacons", "chosen_by")


def _f(v, nd=9):
    return f"{v:.{nd}f}"


def summarize(result, pacing):
    cycles = result.cycles
    errs = np.array([c.fix_error for c in cycles if c.fix_error is not None])
    recs = [r for c in cycles for r in c.records.values()]
    out = {
        "cycles": len(cycles),
        "pacing": pacing,
        "fixes": int(errs.size),
        "fix_failures": sum(1 for c in cycles if c.fix_failure),
        "median_fix_error_m": round(float(np.median(errs)), 9) if errs.size else None,
        "p95_fix_error_m": round(float(np.percentile(errs, 95)), 9) if errs.size else None,
        "cycle_rate_hz": round(cycle_rate(cycles), 6),
        "measurements": len(recs),
        "ghost_rejections": sum(1 for r in recs if not r.accepted),
        "echo_measurements": sum(1 for r in recs if r.path_kind != "direct"),
        "energy_mah": {bid: round(st.energy_used, 9) for bid, st in sorted(result.beacons.items())},
        "warnings": list(result.warnings),
    }
    return out


def run(scenario, n_cycles=None, duration=None, seed=None, three_d=False):
    sim = Simulator(scenario, seed=seed, three_d=three_d)
    result = sim.run(n_cycles=n_cycles, duration=duration)
    return result, summarize(result, sim.pacing)


def write_outputs(result, summary, out_dir, three_d=False):
    """Write trace.csv, cycles.csv, fixes.csv and summary.json; return their paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {k: os.path.join(out_dir, f"{k}.csv") for k in ("trace", "cycles", "fixes")}
    with open(paths["trace"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for t, entity, event, detail in result.trace:
            w.writerow((_f(t), entity, event, detail))
    with open(paths["cycles"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CYCLE_COLUMNS)
        for c in result.cycles:
            for bid in sorted(c.records):
                r = c.records[bid]
                w.writerow((c.cycle_id, bid, _f(r.tof), r.transducer_index, int(r.accepted), r.path_kind))
    cols = FIX_COLUMNS[:3] + (("z",) if three_d else ()) + FIX_COLUMNS[3:]
    with open(paths["fixes"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for c in result.cycles:
            if c.fix is None:
                continue
            p = c.fix.position
            xyz = [_f(p[0]), _f(p[1])] + ([_f(p[2]) if len(p) > 2 else ""] if three_d else [])
            w.writerow([c.cycle_id, *xyz, _f(c.fix.residual), len(c.fix.beacons), c.fix.chosen_by])
    paths["summary"] = os.path.join(out_dir, "summary.json")
    with open(paths["summary"], "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths
