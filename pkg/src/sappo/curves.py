"""Reference curves: ring geometry error against angle and distance, and filter step responses."""

from __future__ import annotations

import csv
import math

import numpy as np

from .filters import make_filter
from .ring import DEFAULT_BEACON_APOTHEM, DEFAULT_ROBOT_APOTHEM, error_curve

CURVES = ("error_angle", "error_distance", "filter_response")

FILTER_SET = (
    ("ema_0.5", "ema", {"alpha": 0.5}),
    ("ema_0.1", "ema", {"alpha": 0.1}),
    ("moving_average_10", "moving_average", {"n": 10}),
    ("kalman", "kalman", {"r": 1e-2, "q": 1e-4}),
)


def error_angle(distance=4.0, max_deg=15.0, step_deg=0.5, robot_apothem=DEFAULT_ROBOT_APOTHEM,
                beacon_apothem=DEFAULT_BEACON_APOTHEM):
    angles = np.arange(0.0, max_deg + step_deg / 2, step_deg)
    rows = error_curve("angle", distance, np.radians(angles), robot_apothem=robot_apothem,
                       beacon_apothem=beacon_apothem)
    header = ("angle_deg", "error_m")
    return header, [(float(a), e) for a, (_, e) in zip(angles, rows)]


def error_distance(angle_deg=15.0, d_min=0.5, d_max=9.0, step=0.1, robot_apothem=DEFAULT_ROBOT_APOTHEM,
                   beacon_apothem=DEFAULT_BEACON_APOTHEM):
    ds = np.arange(d_min, d_max + step / 2, step)
    rows = error_curve("distance", math.radians(angle_deg), ds, robot_apothem=robot_apothem,
                       beacon_apothem=beacon_apothem)
    return ("distance_m", "error_m"), [(float(d), e) for d, e in rows]


def filter_response(n=60, step_at=10, level=1.0):
    """Each default filter driven by a unit step."""
    xs = [0.0 if i < step_at else level for i in range(n)]
    outs = []
    for _, kind, params in FILTER_SET:
        f = make_filter(kind, **params)
        outs.append([f.step(x) for x in xs])
    header = ("sample", "input") + tuple(name for name, _, _ in FILTER_SET)
    return header, [(i, xs[i], *(o[i] for o in outs)) for i in range(n)]


def step_lag(ys, step_at, level=1.0, frac=0.9):
    """Samples after the step until the output first reaches ``frac`` of the level."""
    for i in range(step_at, len(ys)):
        if ys[i] >= frac * level:
            return i - step_at
    return None


def compute(kind, **params):
    if kind == "error_angle":
        return error_angle(**params)
    if kind == "error_distance":
        return error_distance(**params)
    if kind == "filter_response":
        return filter_response(**params)
    raise ValueError(f"unknown curve {kind!r}; expected one of {CURVES}")


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, int) else f"{v:.9g}" for v in row])


def svg(header, rows, width=640, height=400, pad=48):
    """A bare line chart: the first column on x, every other column as a polyline."""
    data = np.array([[float(v) for v in r] for r in rows])
    x = data[:, 0]
    ys = data[:, 1:]
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    sx = lambda v: pad + (v - x0) / (x1 - x0) * (width - 2 * pad)  # noqa: E731
    sy = lambda v: height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)  # noqa: E731
    colours = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
           f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle" font-size="12">{header[0]}</text>',
           f'<text x="{pad}" y="{pad - 8}" font-size="11">{y1:.4g}</text>',
           f'<text x="{pad}" y="{height - pad + 14}" font-size="11">{y0:.4g}</text>']
    for k in range(ys.shape[1]):
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, ys[:, k]))
        col = colours[k % len(colours)]
        out.append(f'<polyline fill="none" stroke="{col}" points="{pts}"/>')
        out.append(f'<text x="{width - pad - 140}" y="{pad + 14 * (k + 1)}" font-size="11" fill="{col}">'
                   f'{header[k + 1]}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
