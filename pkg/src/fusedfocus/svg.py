"""Minimal SVG line plots (no plotting library)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 480
MARGIN = 56


@dataclass
class Series:
    x: Sequence[float]
    y: Sequence[float]
    color: str = "black"
    label: str = ""
    width: float = 1.2
    dashed: bool = False


@dataclass
class Marker:
    x: float
    y: float
    color: str = "red"
    label: str = ""
    hollow: bool = False


@dataclass
class Figure:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    series: list = field(default_factory=list)
    markers: list = field(default_factory=list)
    hlines: list = field(default_factory=list)
    xlim: Optional[tuple] = None
    ylim: Optional[tuple] = None

    def _limits(self):
        xs = [np.asarray(s.x, float) for s in self.series] + [np.array([m.x for m in self.markers])]
        ys = [np.asarray(s.y, float) for s in self.series] + [np.array([m.y for m in self.markers])]
        xs = np.concatenate([v[np.isfinite(v)] for v in xs if v.size] + [np.empty(0)])
        ys = np.concatenate([v[np.isfinite(v)] for v in ys if v.size] + [np.asarray(self.hlines, float)])
        # an empty figure still renders, on the unit square
        if not xs.size:
            xs = np.array([0.0, 1.0])
        if not ys.size:
            ys = np.array([0.0, 1.0])
        xlim = self.xlim or _pad(xs.min(), xs.max())
        ylim = self.ylim or _pad(ys.min(), ys.max())
        return xlim, ylim

    def render(self) -> str:
        (x0, x1), (y0, y1) = self._limits()
        pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

        def px(x):
            return MARGIN + (x - x0) / (x1 - x0) * pw

        def py(y):
            return HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
               f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
               f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
               f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
        for t in np.linspace(x0, x1, 5):
            out.append(f'<text x="{px(t):.1f}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle">{t:.4g}</text>')
        for t in np.linspace(y0, y1, 5):
            out.append(f'<text x="{MARGIN - 6}" y="{py(t) + 4:.1f}" text-anchor="end">{t:.4g}</text>')
        for h in self.hlines:
            out.append(f'<line x1="{MARGIN}" x2="{WIDTH - MARGIN}" y1="{py(h):.2f}" y2="{py(h):.2f}" '
                       f'stroke="gray" stroke-dasharray="4 3"/>')
        for s in self.series:
            pts = [(px(a), py(b)) for a, b in zip(np.asarray(s.x, float), np.asarray(s.y, float))
                   if np.isfinite(a) and np.isfinite(b)]
            if not pts:
                continue
            d = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            dash = ' stroke-dasharray="5 3"' if s.dashed else ""
            out.append(f'<polyline fill="none" stroke="{s.color}" stroke-width="{s.width}"{dash} points="{d}"/>')
        for m in self.markers:
            fill = "none" if m.hollow else m.color
            out.append(f'<circle cx="{px(m.x):.2f}" cy="{py(m.y):.2f}" r="4" fill="{fill}" stroke="{m.color}"/>')
        legend = [s for s in self.series if s.label] + [m for m in self.markers if m.label]
        for i, item in enumerate(legend):
            yy = MARGIN + 14 + 14 * i
            out.append(f'<rect x="{WIDTH - MARGIN - 150}" y="{yy - 9}" width="10" height="10" fill="{item.color}"/>')
            out.append(f'<text x="{WIDTH - MARGIN - 135}" y="{yy}">{escape(item.label)}</text>')
        out.append(f'<text x="{WIDTH / 2}" y="{MARGIN - 18}" text-anchor="middle" font-size="14">{escape(self.title)}</text>')
        out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 14}" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text x="16" y="{HEIGHT / 2}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {HEIGHT / 2})">{escape(self.ylabel)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def _pad(lo, hi):
    if hi == lo:
        d = 1.0 if lo == 0 else abs(lo) * 0.1
        return lo - d, hi + d
    d = 0.05 * (hi - lo)
    return float(lo - d), float(hi + d)
