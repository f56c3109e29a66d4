"""Minimal static SVG line and strip plots (no plotting dependency)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")


@dataclass
class Series:
    x: list
    y: list
    label: str
    dashed: bool = False


@dataclass
class LinePlot:
    title: str
    xlabel: str
    ylabel: str
    logx: bool = False
    logy: bool = False
    series: list = field(default_factory=list)
    width: int = 640
    height: int = 420

    def add(self, x, y, label, dashed=False):
        self.series.append(Series([float(v) for v in x], [float(v) for v in y], label, dashed))
        return self

    def _tr(self, v, log):
        return math.log10(v) if log else v

    def render(self) -> str:
        m = dict(l=70, r=20, t=40, b=50)
        W, H = self.width, self.height
        pts = []
        for s in self.series:
            for a, b in zip(s.x, s.y):
                if (self.logx and a <= 0) or (self.logy and b <= 0) or not (math.isfinite(a) and math.isfinite(b)):
                    continue
                pts.append((self._tr(a, self.logx), self._tr(b, self.logy)))
        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
               f'<rect width="{W}" height="{H}" fill="white"/>',
               f'<text x="{W / 2}" y="22" text-anchor="middle" font-size="15">{escape(self.title)}</text>']
        if not pts:
            out.append(f'<text x="{W / 2}" y="{H / 2}" text-anchor="middle">no data</text></svg>')
            return "\n".join(out)
        xs, ys = zip(*pts)
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        if x1 == x0:
            x0, x1 = x0 - 1, x1 + 1
        if y1 == y0:
            y0, y1 = y0 - 1, y1 + 1

        def px(v):
            return m["l"] + (v - x0) / (x1 - x0) * (W - m["l"] - m["r"])

        def py(v):
            return H - m["b"] - (v - y0) / (y1 - y0) * (H - m["t"] - m["b"])

        out.append(f'<rect x="{m["l"]}" y="{m["t"]}" width="{W - m["l"] - m["r"]}" height="{H - m["t"] - m["b"]}" fill="none" stroke="black"/>')
        for v in np.linspace(x0, x1, 5):
            lab = f"1e{v:.2g}" if self.logx else f"{v:.3g}"
            out.append(f'<text x="{px(v):.1f}" y="{H - m["b"] + 18}" text-anchor="middle" font-size="11">{lab}</text>')
        for v in np.linspace(y0, y1, 5):
            lab = f"1e{v:.2g}" if self.logy else f"{v:.3g}"
            out.append(f'<text x="{m["l"] - 6}" y="{py(v) + 4:.1f}" text-anchor="end" font-size="11">{lab}</text>')
        out.append(f'<text x="{W / 2}" y="{H - 12}" text-anchor="middle" font-size="12">{escape(self.xlabel)}</text>')
        out.append(f'<text x="16" y="{H / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {H / 2})">{escape(self.ylabel)}</text>')
        for i, s in enumerate(self.series):
            col = PALETTE[i % len(PALETTE)]
            path = []
            for a, b in zip(s.x, s.y):
                if (self.logx and a <= 0) or (self.logy and b <= 0) or not (math.isfinite(a) and math.isfinite(b)):
                    continue
                path.append(f"{px(self._tr(a, self.logx)):.2f},{py(self._tr(b, self.logy)):.2f}")
            dash = ' stroke-dasharray="6,4"' if s.dashed else ""
            out.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5"{dash} points="{" ".join(path)}"/>')
            out.append(f'<text x="{W - m["r"] - 8}" y="{m["t"] + 16 + 14 * i}" text-anchor="end" font-size="11" fill="{col}">{escape(s.label)}</text>')
        out.append("</svg>")
        return "\n".join(out)


def heat_strip(title: str, x, rows: dict, width: int = 640, row_height: int = 28) -> str:
    """One coloured strip per row; colour encodes log10 of the value."""
    labels = list(rows)
    H = 50 + row_height * len(labels)
    vals = np.concatenate([np.asarray(rows[k], float) for k in labels]) if labels else np.zeros(1)
    vals = vals[vals > 0]
    lo, hi = (np.log10(vals.min()), np.log10(vals.max())) if vals.size else (0.0, 1.0)
    if hi == lo:
        hi = lo + 1
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{H}" viewBox="0 0 {width} {H}">',
           f'<rect width="{width}" height="{H}" fill="white"/>',
           f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>']
    left = 110
    for r, key in enumerate(labels):
        v = np.asarray(rows[key], float)
        n = max(len(v), 1)
        cw = (width - left - 10) / n
        y = 35 + r * row_height
        out.append(f'<text x="{left - 6}" y="{y + row_height / 2 + 4}" text-anchor="end" font-size="11">{escape(str(key))}</text>')
        for j, z in enumerate(v):
            s = 0.0 if z <= 0 else (np.log10(z) - lo) / (hi - lo)
            red, blue = int(255 * s), int(255 * (1 - s))
            out.append(f'<rect x="{left + j * cw:.2f}" y="{y}" width="{cw + 0.5:.2f}" height="{row_height - 4}" fill="rgb({red},60,{blue})"/>')
    out.append(f'<text x="{width - 10}" y="{H - 4}" text-anchor="end" font-size="10">log10 range [{lo:.2f}, {hi:.2f}]</text>')
    out.append("</svg>")
    return "\n".join(out)
