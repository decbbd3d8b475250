"""Minimal SVG line and difference charts, no plotting dependency."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=64, right=24, top=40, bottom=52)
PALETTE = ("#1f4e9c", "#c62828", "#2e7d32", "#ef6c00", "#6a1b9a", "#00838f", "#5d4037",
           "#455a64", "#ad1457")


class _Canvas:
    def __init__(self, xlim, ylim, width=WIDTH, height=HEIGHT):
        self.parts = []
        self.xlim = xlim
        self.ylim = ylim
        self.w = width
        self.h = height
        self.x0 = MARGIN["left"]
        self.x1 = width - MARGIN["right"]
        self.y0 = height - MARGIN["bottom"]
        self.y1 = MARGIN["top"]

    def sx(self, x):
        lo, hi = self.xlim
        return self.x0 + (x - lo) / (hi - lo) * (self.x1 - self.x0)

    def sy(self, y):
        lo, hi = self.ylim
        return self.y0 - (y - lo) / (hi - lo) * (self.y0 - self.y1)

    def add(self, s):
        self.parts.append(s)

    def text(self, x, y, s, anchor="middle", size=12, extra=""):
        self.add(f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" text-anchor="{anchor}" '
                 f'font-family="sans-serif"{extra}>{escape(str(s))}</text>')

    def axes(self, title, xlabel, ylabel, xticks, yticks):
        self.add(f'<rect x="{self.x0}" y="{self.y1}" width="{self.x1 - self.x0}" '
                 f'height="{self.y0 - self.y1}" fill="none" stroke="#333"/>')
        for t in xticks:
            x = self.sx(t)
            self.add(f'<line x1="{x:.1f}" y1="{self.y0}" x2="{x:.1f}" y2="{self.y0 + 5}" stroke="#333"/>')
            self.text(x, self.y0 + 18, _fmt(t), size=11)
        for t in yticks:
            y = self.sy(t)
            self.add(f'<line x1="{self.x0 - 5}" y1="{y:.1f}" x2="{self.x0}" y2="{y:.1f}" stroke="#333"/>')
            self.add(f'<line x1="{self.x0}" y1="{y:.1f}" x2="{self.x1}" y2="{y:.1f}" stroke="#eee"/>')
            self.text(self.x0 - 8, y + 4, _fmt(t), anchor="end", size=11)
        self.text(self.w / 2, 24, title, size=14)
        self.text((self.x0 + self.x1) / 2, self.h - 14, xlabel)
        cx, cy = 18, (self.y0 + self.y1) / 2
        self.text(cx, cy, ylabel, extra=f' transform="rotate(-90 {cx} {cy:.1f})"')

    def polyline(self, xs, ys, color, width=1.5, dash=None):
        pts = " ".join(f"{self.sx(x):.2f},{self.sy(y):.2f}" for x, y in zip(xs, ys))
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.add(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{d}/>')

    def render(self):
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w}" height="{self.h}" '
                f'viewBox="0 0 {self.w} {self.h}">')
        return "\n".join([head, f'<rect width="{self.w}" height="{self.h}" fill="white"/>',
                          *self.parts, "</svg>"]) + "\n"


def _fmt(v):
    return f"{v:.3g}"


def _ticks(lo, hi, n=5):
    return list(np.linspace(lo, hi, n))


def _padded(values, pad=0.05):
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi == lo:
        lo, hi = lo - 1, hi + 1
    span = hi - lo
    return lo - pad * span, hi + pad * span


def line_chart(series, title="", xlabel="", ylabel="", ylim=None):
    """``series``: iterable of dicts with ``x``, ``y`` and optional ``label``,
    ``color``, ``width``, ``dash``.  Returns the SVG document as a string."""
    series = list(series)
    xs = np.concatenate([np.asarray(s["x"], float) for s in series])
    ys = np.concatenate([np.asarray(s["y"], float) for s in series])
    xlim = (float(xs.min()), float(xs.max())) if xs.max() > xs.min() else (xs.min() - 1, xs.max() + 1)
    ylim = ylim or _padded(ys)
    c = _Canvas(xlim, ylim)
    c.axes(title, xlabel, ylabel, _ticks(*xlim), _ticks(*ylim))
    for k, s in enumerate(series):
        color = s.get("color", PALETTE[k % len(PALETTE)])
        c.polyline(s["x"], s["y"], color, s.get("width", 1.5), s.get("dash"))
        if s.get("label"):
            y = c.y1 + 14 + 15 * k
            c.add(f'<line x1="{c.x1 - 150}" y1="{y - 4}" x2="{c.x1 - 128}" y2="{y - 4}" '
                  f'stroke="{color}" stroke-width="{s.get("width", 1.5)}"/>')
            c.text(c.x1 - 122, y, s["label"], anchor="start", size=11)
    return c.render()


def difference_chart(groups, title="", xlabel="removed fraction", ylabel="DAE - SVM accuracy"):
    """One asterisk per ``(x, difference)`` point, grouped by session, with the
    group mean drawn as a bar to the right of the points.

    ``groups``: list of ``(label, xs, diffs)``.
    """
    groups = list(groups)
    all_x = np.concatenate([np.asarray(g[1], float) for g in groups])
    all_d = np.concatenate([np.asarray(g[2], float) for g in groups] + [[0.0]])
    x_lo, x_hi = float(all_x.min()), float(all_x.max())
    step = (x_hi - x_lo) / max(len(np.unique(all_x)) - 1, 1) or 0.1
    bar_x = x_hi + 1.5 * step
    xlim = (x_lo - 0.5 * step, bar_x + (len(groups) + 0.5) * step * 0.6)
    lim = max(abs(all_d).max(), 0.05) * 1.15
    c = _Canvas(xlim, (-lim, lim))
    c.axes(title, xlabel, ylabel, sorted(np.unique(all_x)), _ticks(-lim, lim))
    c.add(f'<line x1="{c.x0}" y1="{c.sy(0):.1f}" x2="{c.x1}" y2="{c.sy(0):.1f}" stroke="#333"/>')
    for k, (label, xs, diffs) in enumerate(groups):
        color = PALETTE[k % len(PALETTE)]
        for x, d in zip(xs, diffs):
            c.text(c.sx(x), c.sy(d) + 5, "*", size=16, extra=f' fill="{color}"')
        mean = float(np.mean(diffs))
        bx = c.sx(bar_x + k * step * 0.6)
        top, base = c.sy(max(mean, 0)), c.sy(min(mean, 0))
        c.add(f'<rect x="{bx - 5:.1f}" y="{top:.1f}" width="10" height="{max(base - top, 0.5):.1f}" '
              f'fill="{color}"><title>{escape(str(label))}: {mean:.4f}</title></rect>')
    return c.render()
