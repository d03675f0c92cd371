"""Minimal static SVG line plots (axes, ticks, legend, optional log axes)."""

from __future__ import annotations

import math
from typing import Dict, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=70, right=170, top=40, bottom=55)


def _nice_ticks(lo, hi, count=6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = np.arange(first, hi + step * 1e-6, step)
    return [float(t) for t in ticks]


def _log_ticks(lo, hi):
    return [10.0**e for e in range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1)]


def _fmt_tick(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.0e}"
    return f"{v:g}"


def line_plot(
    series: Dict[str, Tuple[Sequence[float], Sequence[float]]],
    path,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    logy: bool = False,
) -> None:
    """Write ``series`` (label -> (x, y)) as polylines to an SVG file.

    Non-finite points, and nonpositive ones on a log axis, are skipped.
    """
    cleaned = {}
    for label, (xs, ys) in series.items():
        x = np.asarray(xs, dtype=float)
        y = np.asarray(ys, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if logx:
            keep &= x > 0
        if logy:
            keep &= y > 0
        cleaned[label] = (x[keep], y[keep])
    allx = np.concatenate([v[0] for v in cleaned.values()] or [np.array([0.0, 1.0])])
    ally = np.concatenate([v[1] for v in cleaned.values()] or [np.array([0.0, 1.0])])
    if allx.size == 0:
        allx = np.array([1.0 if logx else 0.0, 10.0 if logx else 1.0])
    if ally.size == 0:
        ally = np.array([1.0 if logy else 0.0, 10.0 if logy else 1.0])

    def axis(values, log):
        lo, hi = float(values.min()), float(values.max())
        if log:
            ticks = _log_ticks(lo, hi)
            return math.log10(ticks[0]), math.log10(ticks[-1]), ticks
        ticks = _nice_ticks(lo, hi)
        return min(lo, ticks[0]), max(hi, ticks[-1]), ticks

    x0, x1, xticks = axis(allx, logx)
    y0, y1, yticks = axis(ally, logy)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        v = math.log10(v) if logx else v
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def py(v):
        v = math.log10(v) if logy else v
        return MARGIN["top"] + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    for t in xticks:
        x = px(t)
        out.append(f'<line x1="{x:.2f}" y1="{MARGIN["top"]}" x2="{x:.2f}" '
                   f'y2="{MARGIN["top"] + ph}" stroke="#ddd"/>')
        out.append(f'<text x="{x:.2f}" y="{MARGIN["top"] + ph + 18}" '
                   f'text-anchor="middle">{_fmt_tick(t)}</text>')
    for t in yticks:
        y = py(t)
        out.append(f'<line x1="{MARGIN["left"]}" y1="{y:.2f}" x2="{MARGIN["left"] + pw}" '
                   f'y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{y + 4:.2f}" '
                   f'text-anchor="end">{_fmt_tick(t)}</text>')
    for i, (label, (xs, ys)) in enumerate(cleaned.items()):
        color = PALETTE[i % len(PALETTE)]
        if xs.size:
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xs, ys))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        ly = MARGIN["top"] + 14 + 18 * i
        lx = MARGIN["left"] + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 28}" y="{ly}">{escape(label)}</text>')
    out.append(f'<text x="{WIDTH / 2:.0f}" y="22" text-anchor="middle" '
               f'font-size="14">{escape(title)}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.0f}" y="{HEIGHT - 12}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(18,{MARGIN["top"] + ph / 2:.0f}) rotate(-90)" '
               f'text-anchor="middle">{escape(ylabel)}</text>')
    out.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
