"""Minimal self-contained SVG line plots.

Hand-rolled rather than delegated to a plotting library so the output
is a pure function of its inputs: rendering the same data twice yields
byte-identical files (no timestamps, random ids, or font metrics).
"""

import numpy as np

__all__ = ["line_plot_svg"]

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 30, 60


def _fmt(x):
    return f"{x:.6g}"


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = np.linspace(lo, hi, n)
    return [float(f"{t:.4g}") for t in raw]


def line_plot_svg(x, y, y_err=None, hlines=(), title="", xlabel="", ylabel=""):
    """One data series with optional error bars and reference h-lines.

    Returns the SVG document as a string.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lo_y = float(np.min(y if y_err is None else y - np.asarray(y_err)))
    hi_y = float(np.max(y if y_err is None else y + np.asarray(y_err)))
    for h in hlines:
        lo_y = min(lo_y, float(h))
        hi_y = max(hi_y, float(h))
    pad = 0.08 * (hi_y - lo_y or 1.0)
    lo_y -= pad
    hi_y += pad
    lo_x, hi_x = float(np.min(x)), float(np.max(x))
    if hi_x == lo_x:
        hi_x = lo_x + 1.0

    def px(v):
        return _ML + (v - lo_x) / (hi_x - lo_x) * (_W - _ML - _MR)

    def py(v):
        return _H - _MB - (v - lo_y) / (hi_y - lo_y) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="20" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{title}</text>',
    ]
    # axes
    parts.append(f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" '
                 'stroke="black" stroke-width="1"/>')
    parts.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" '
                 'stroke="black" stroke-width="1"/>')
    for t in _ticks(lo_x, hi_x):
        if lo_x <= t <= hi_x:
            parts.append(f'<line x1="{_fmt(px(t))}" y1="{_H - _MB}" '
                         f'x2="{_fmt(px(t))}" y2="{_H - _MB + 5}" stroke="black"/>')
            parts.append(f'<text x="{_fmt(px(t))}" y="{_H - _MB + 20}" '
                         f'text-anchor="middle" font-family="sans-serif" '
                         f'font-size="11">{_fmt(t)}</text>')
    for t in _ticks(lo_y, hi_y):
        if lo_y <= t <= hi_y:
            parts.append(f'<line x1="{_ML - 5}" y1="{_fmt(py(t))}" x2="{_ML}" '
                         f'y2="{_fmt(py(t))}" stroke="black"/>')
            parts.append(f'<text x="{_ML - 8}" y="{_fmt(py(t) + 4)}" '
                         f'text-anchor="end" font-family="sans-serif" '
                         f'font-size="11">{_fmt(t)}</text>')
    parts.append(f'<text x="{_W / 2}" y="{_H - 15}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12">{xlabel}</text>')
    parts.append(f'<text x="18" y="{_H / 2}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12" '
                 f'transform="rotate(-90 18 {_H / 2})">{ylabel}</text>')
    # reference lines
    for h in hlines:
        parts.append(f'<line x1="{_ML}" y1="{_fmt(py(h))}" x2="{_W - _MR}" '
                     f'y2="{_fmt(py(h))}" stroke="#c0392b" stroke-width="1" '
                     'stroke-dasharray="6,4"/>')
    # error bars
    if y_err is not None:
        y_err = np.asarray(y_err, dtype=float)
        for xi, yi, ei in zip(x, y, y_err):
            parts.append(f'<line x1="{_fmt(px(xi))}" y1="{_fmt(py(yi - ei))}" '
                         f'x2="{_fmt(px(xi))}" y2="{_fmt(py(yi + ei))}" '
                         'stroke="#2c3e50" stroke-width="1"/>')
    # polyline and markers
    pts = " ".join(f"{_fmt(px(xi))},{_fmt(py(yi))}" for xi, yi in zip(x, y))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="#2980b9" '
                 'stroke-width="1.5"/>')
    for xi, yi in zip(x, y):
        parts.append(f'<circle cx="{_fmt(px(xi))}" cy="{_fmt(py(yi))}" r="3" '
                     'fill="#2980b9"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
