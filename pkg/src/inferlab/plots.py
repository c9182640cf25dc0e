"""Minimal SVG line plots: axes, one polyline per series, optional error bars."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]
W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 190, 40, 60


def _n(v):
    return format(v, ".6g")


def _range(values):
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def line_plot(series, xlabel, ylabel, title=""):
    """``series``: iterable of ``(label, xs, ys, errs_or_None)``. Returns SVG text."""
    series = list(series)
    xs_all = [x for _, xs, _, _ in series for x in xs]
    ys_all = []
    for _, _, ys, errs in series:
        for i, y in enumerate(ys):
            e = errs[i] if errs else 0.0
            ys_all += [y - e, y + e]
    x0, x1 = _range(xs_all)
    y0, y1 = _range(ys_all)
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2 - RIGHT / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
           f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>']
    for i in range(5):
        xv = x0 + (x1 - x0) * (i + 0.5) / 5
        yv = y0 + (y1 - y0) * (i + 0.5) / 5
        out.append(f'<text x="{_n(px(xv))}" y="{TOP + ph + 18}" text-anchor="middle" font-size="11">{_n(xv)}</text>')
        out.append(f'<text x="{LEFT - 6}" y="{_n(py(yv) + 4)}" text-anchor="end" font-size="11">{_n(yv)}</text>')
    out.append(f'<text x="{LEFT + pw / 2}" y="{H - 15}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{TOP + ph / 2}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 18 {TOP + ph / 2})">{escape(ylabel)}</text>')
    for k, (label, xs, ys, errs) in enumerate(series):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{_n(px(x))},{_n(py(y))}" for x, y in zip(xs, ys) if math.isfinite(y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        for i, (x, y) in enumerate(zip(xs, ys)):
            if not math.isfinite(y):
                continue
            out.append(f'<circle cx="{_n(px(x))}" cy="{_n(py(y))}" r="3" fill="{color}"/>')
            if errs and errs[i] > 0:
                out.append(f'<line x1="{_n(px(x))}" y1="{_n(py(y - errs[i]))}" x2="{_n(px(x))}" '
                           f'y2="{_n(py(y + errs[i]))}" stroke="{color}"/>')
        ly = TOP + 10 + 18 * k
        out.append(f'<line x1="{W - RIGHT + 10}" y1="{ly}" x2="{W - RIGHT + 30}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="2"/>')
        out.append(f'<text x="{W - RIGHT + 35}" y="{ly + 4}" font-size="11">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
