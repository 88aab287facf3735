"""Minimal log-log scatter plot emitter (points plus fitted lines)."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _ticks(lo, hi):
    return list(range(math.floor(lo), math.ceil(hi) + 1))


def loglog_svg(series, title="", xlabel="|x|", ylabel="magnitude", width=560, height=400):
    """``series``: iterable of dicts with ``label``, ``x``, ``y`` and optional
    ``slope``/``intercept`` (natural-log fit ``log y = slope log x + intercept``)."""
    series = [s for s in series if len(s["x"])]
    ml, mr, mt, mb = 70, 150, 36, 48
    pw, ph = width - ml - mr, height - mt - mb
    lx = [math.log10(v) for s in series for v in s["x"] if v > 0]
    ly = [math.log10(v) for s in series for v in s["y"] if v > 0]
    if not lx or not ly:
        lx, ly = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = math.floor(min(lx)), math.ceil(max(lx))
    y0, y1 = math.floor(min(ly)), math.ceil(max(ly))
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def px(v):
        return ml + (math.log10(v) - x0) / (x1 - x0) * pw

    def py(v):
        return mt + (y1 - math.log10(v)) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        x = ml + (t - x0) / (x1 - x0) * pw
        out.append(f'<line x1="{x:.2f}" y1="{mt + ph}" x2="{x:.2f}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{mt + ph + 18}" text-anchor="middle">1e{t}</text>')
    for t in _ticks(y0, y1):
        y = mt + (y1 - t) / (y1 - y0) * ph
        out.append(f'<line x1="{ml - 5}" y1="{y:.2f}" x2="{ml}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{y + 4:.2f}" text-anchor="end">1e{t}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{mt + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 14 {mt + ph / 2})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{ml + pw / 2}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>')
    for i, s in enumerate(series):
        c = _COLORS[i % len(_COLORS)]
        for xv, yv in zip(s["x"], s["y"]):
            if xv > 0 and yv > 0:
                out.append(f'<circle cx="{px(xv):.2f}" cy="{py(yv):.2f}" r="3" fill="{c}"/>')
        if s.get("slope") is not None:
            xa, xb = min(s["x"]), max(s["x"])
            ya = math.exp(s["intercept"]) * xa ** s["slope"]
            yb = math.exp(s["intercept"]) * xb ** s["slope"]
            out.append(f'<line x1="{px(xa):.2f}" y1="{py(ya):.2f}" x2="{px(xb):.2f}" y2="{py(yb):.2f}" '
                       f'stroke="{c}" stroke-dasharray="4 3"/>')
        label = s["label"] + (f" ({s['slope']:.2f})" if s.get("slope") is not None else "")
        ly_ = mt + 12 + 16 * i
        out.append(f'<circle cx="{ml + pw + 12}" cy="{ly_ - 4}" r="3" fill="{c}"/>')
        out.append(f'<text x="{ml + pw + 20}" y="{ly_}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
