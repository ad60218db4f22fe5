"""Tiny SVG line/scatter plotter, enough for the reproduction figures."""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f")


def nice_ticks(lo: float, hi: float, n: int = 6) -> list:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return []
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 12))
        v += step
    return ticks


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e5 or abs(v) < 1e-3:
        return f"{v:.2g}"
    return f"{v:g}"


class Figure:
    def __init__(self, title: str = "", xlabel: str = "", ylabel: str = "",
                 width: int = 640, height: int = 420):
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.width, self.height = width, height
        self.series = []

    def line(self, x, y, label=None, color=None, dashed=False, width=1.5):
        self.series.append(("line", np.asarray(x, float), np.asarray(y, float), label,
                            color or PALETTE[len(self.series) % len(PALETTE)], dashed, width))
        return self

    def scatter(self, x, y, label=None, color=None, size=2.5):
        self.series.append(("scatter", np.asarray(x, float), np.asarray(y, float), label,
                            color or PALETTE[len(self.series) % len(PALETTE)], False, size))
        return self

    def _bounds(self):
        xs = np.concatenate([s[1] for s in self.series]) if self.series else np.array([0.0, 1.0])
        ys = np.concatenate([s[2] for s in self.series]) if self.series else np.array([0.0, 1.0])
        xs, ys = xs[np.isfinite(xs)], ys[np.isfinite(ys)]
        x0, x1 = (xs.min(), xs.max()) if xs.size else (0.0, 1.0)
        y0, y1 = (ys.min(), ys.max()) if ys.size else (0.0, 1.0)
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        pad = 0.04 * (y1 - y0)
        return x0, x1, y0 - pad, y1 + pad

    def to_svg(self) -> str:
        W, H = self.width, self.height
        left, right, top, bottom = 70, 20, 36, 50
        pw, ph = W - left - right, H - top - bottom
        x0, x1, y0, y1 = self._bounds()

        def sx(v):
            return left + (v - x0) / (x1 - x0) * pw

        def sy(v):
            return top + ph - (v - y0) / (y1 - y0) * ph

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
               f'font-family="sans-serif" font-size="11">',
               f'<rect width="{W}" height="{H}" fill="white"/>',
               f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
        for t in nice_ticks(x0, x1):
            X = sx(t)
            out.append(f'<line x1="{X:.2f}" y1="{top + ph}" x2="{X:.2f}" y2="{top + ph + 4}" stroke="black"/>')
            out.append(f'<text x="{X:.2f}" y="{top + ph + 16}" text-anchor="middle">{_fmt(t)}</text>')
        for t in nice_ticks(y0, y1):
            Y = sy(t)
            out.append(f'<line x1="{left - 4}" y1="{Y:.2f}" x2="{left}" y2="{Y:.2f}" stroke="black"/>')
            out.append(f'<text x="{left - 6}" y="{Y + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
        out.append(f'<text x="{W / 2}" y="{20}" text-anchor="middle" font-size="13">{escape(self.title)}</text>')
        out.append(f'<text x="{left + pw / 2}" y="{H - 12}" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {top + ph / 2})">{escape(self.ylabel)}</text>')
        out.append(f'<clipPath id="plot"><rect x="{left}" y="{top}" width="{pw}" height="{ph}"/></clipPath>')
        out.append('<g clip-path="url(#plot)">')
        for kind, x, y, _, color, dashed, w in self.series:
            ok = np.isfinite(x) & np.isfinite(y)
            if kind == "line":
                pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[ok], y[ok]))
                dash = ' stroke-dasharray="5,4"' if dashed else ""
                out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{w}"{dash}/>')
            else:
                for a, b in zip(x[ok], y[ok]):
                    out.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="{w}" fill="{color}"/>')
        out.append("</g>")
        labelled = [s for s in self.series if s[3]]
        for k, (kind, _, _, label, color, dashed, _) in enumerate(labelled):
            yy = top + 14 + 16 * k
            xx = left + pw - 150
            if kind == "line":
                dash = ' stroke-dasharray="5,4"' if dashed else ""
                out.append(f'<line x1="{xx}" y1="{yy - 4}" x2="{xx + 20}" y2="{yy - 4}" stroke="{color}" stroke-width="2"{dash}/>')
            else:
                out.append(f'<circle cx="{xx + 10}" cy="{yy - 4}" r="3" fill="{color}"/>')
            out.append(f'<text x="{xx + 26}" y="{yy}">{escape(str(label))}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_svg())
        return path
