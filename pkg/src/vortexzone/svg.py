"""Minimal SVG writer for curve overlays, quiver plots and line charts.

Numbers are printed with a fixed number of decimals so that identical data
gives identical bytes.  The only run-dependent text is the version comment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from . import __version__

PALETTE = ("#1f3a93", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#2c3e50", "#16a085", "#7f8c8d")


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    closed: bool = False
    color: str | None = None
    width: float = 1.2
    dashed: bool = False


@dataclass
class Arrows:
    label: str
    base: np.ndarray
    vec: np.ndarray
    color: str = "#444444"


@dataclass
class Figure:
    title: str
    width: int = 640
    height: int = 640
    equal_aspect: bool = True
    xlabel: str = ""
    ylabel: str = ""
    series: list[Series] = field(default_factory=list)
    arrows: list[Arrows] = field(default_factory=list)

    def add_curve(self, label, points, *, closed=True, **kw) -> None:
        pts = np.asarray(points, dtype=complex)
        self.series.append(Series(label, pts.real.copy(), pts.imag.copy(), closed=closed, **kw))

    def add_line(self, label, x, y, **kw) -> None:
        self.series.append(Series(label, np.asarray(x, float), np.asarray(y, float), **kw))

    def add_arrows(self, label, base, vec, **kw) -> None:
        self.arrows.append(Arrows(label, np.asarray(base, complex), np.asarray(vec, complex), **kw))

    # ------------------------------------------------------------------

    def _bounds(self):
        xs = [s.x for s in self.series] + [a.base.real for a in self.arrows]
        ys = [s.y for s in self.series] + [a.base.imag for a in self.arrows]
        x = np.concatenate(xs) if xs else np.array([0.0, 1.0])
        y = np.concatenate(ys) if ys else np.array([0.0, 1.0])
        x0, x1, y0, y1 = float(x.min()), float(x.max()), float(y.min()), float(y.max())
        if x1 - x0 < 1e-12:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 - y0 < 1e-12:
            y0, y1 = y0 - 0.5, y1 + 0.5
        if self.equal_aspect:
            span = max(x1 - x0, y1 - y0)
            cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
            x0, x1, y0, y1 = cx - span / 2, cx + span / 2, cy - span / 2, cy + span / 2
        pad_x, pad_y = 0.05 * (x1 - x0), 0.05 * (y1 - y0)
        return x0 - pad_x, x1 + pad_x, y0 - pad_y, y1 + pad_y

    def render(self) -> str:
        margin = 50
        w, h = self.width, self.height
        x0, x1, y0, y1 = self._bounds()
        sx = (w - 2 * margin) / (x1 - x0)
        sy = (h - 2 * margin) / (y1 - y0)

        def px(x):
            return margin + (np.asarray(x) - x0) * sx

        def py(y):
            return h - margin - (np.asarray(y) - y0) * sy

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
            f"<!-- vortexzone {__version__} -->",
            f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
            f'<text x="{w / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(self.title)}</text>',
            f'<rect x="{margin}" y="{margin}" width="{w - 2 * margin}" height="{h - 2 * margin}" fill="none" stroke="#bbbbbb"/>',
        ]
        if self.xlabel:
            out.append(f'<text x="{w / 2:.1f}" y="{h - 12}" text-anchor="middle" font-family="sans-serif" font-size="12">{escape(self.xlabel)}</text>')
        if self.ylabel:
            out.append(f'<text x="14" y="{h / 2:.1f}" transform="rotate(-90 14 {h / 2:.1f})" text-anchor="middle" font-family="sans-serif" font-size="12">{escape(self.ylabel)}</text>')
        out.append(f'<text x="{margin}" y="{h - margin + 16}" font-family="sans-serif" font-size="10">{x0:.3g}</text>')
        out.append(f'<text x="{w - margin}" y="{h - margin + 16}" text-anchor="end" font-family="sans-serif" font-size="10">{x1:.3g}</text>')
        out.append(f'<text x="{margin - 4}" y="{h - margin}" text-anchor="end" font-family="sans-serif" font-size="10">{y0:.3g}</text>')
        out.append(f'<text x="{margin - 4}" y="{margin + 8}" text-anchor="end" font-family="sans-serif" font-size="10">{y1:.3g}</text>')

        legend = []
        for k, s in enumerate(self.series):
            color = s.color or PALETTE[k % len(PALETTE)]
            xs, ys = px(s.x), py(s.y)
            d = "M" + " L".join(f"{a:.2f},{b:.2f}" for a, b in zip(xs, ys))
            if s.closed:
                d += " Z"
            dash = ' stroke-dasharray="5,3"' if s.dashed else ""
            out.append(f'<path class="curve" d="{d}" fill="none" stroke="{color}" stroke-width="{s.width}"{dash}><title>{escape(s.label)}</title></path>')
            legend.append((s.label, color))
        for a in self.arrows:
            bx, by = px(a.base.real), py(a.base.imag)
            ex, ey = px(a.base.real + a.vec.real), py(a.base.imag + a.vec.imag)
            segs = " ".join(f"M{p:.2f},{q:.2f} L{r:.2f},{t:.2f}" for p, q, r, t in zip(bx, by, ex, ey))
            out.append(f'<g class="quiver" stroke="{a.color}" stroke-width="0.8"><path d="{segs}" fill="none"/>')
            out.append("".join(f'<circle cx="{r:.2f}" cy="{t:.2f}" r="1.2" fill="{a.color}" stroke="none"/>' for r, t in zip(ex, ey)))
            out.append("</g>")
            legend.append((a.label, a.color))

        out.append('<g id="legend" font-family="sans-serif" font-size="11">')
        for k, (label, color) in enumerate(legend):
            y = margin + 14 + 16 * k
            out.append(f'<line x1="{margin + 8}" y1="{y - 4}" x2="{margin + 28}" y2="{y - 4}" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{margin + 34}" y="{y}">{escape(label)}</text>')
        out.append("</g>")
        out.append("</svg>")
        return "\n".join(out) + "\n"
