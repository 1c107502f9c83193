"""Minimal SVG plot emitter.

Shapes are collected in data coordinates and mapped onto a fixed 800x600
canvas when the figure is rendered, so the view always fits the data.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional
from xml.sax.saxutils import escape, quoteattr

import numpy as np

WIDTH = 800
HEIGHT = 600
MARGIN = 50


@dataclass
class _Shape:
    kind: str  # polyline, polygon, circle, marker, text
    xy: np.ndarray
    style: dict
    radius: float = 0.0
    label: str = ""


@dataclass
class Figure:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    equal_aspect: bool = False
    shapes: list = field(default_factory=list)

    def polyline(self, xy, stroke="black", width=1.5, dash: Optional[str] = None):
        style = {"fill": "none", "stroke": stroke, "stroke-width": width}
        if dash:
            style["stroke-dasharray"] = dash
        self.shapes.append(_Shape("polyline", _pts(xy), style))

    def polygon(self, xy, fill="#dde6f0", stroke="#4a6a8a", width=1.0):
        self.shapes.append(_Shape("polygon", _pts(xy),
                                  {"fill": fill, "stroke": stroke, "stroke-width": width}))

    def circle(self, center, radius, fill="none", stroke="#4a6a8a", width=1.0):
        """Circle with a radius in data units."""
        c = _pts([center])
        self.shapes.append(_Shape("circle", c, {"fill": fill, "stroke": stroke,
                                                "stroke-width": width}, radius=float(radius)))

    def markers(self, xy, fill="black", size=3.0):
        """Dots with a fixed pixel size."""
        self.shapes.append(_Shape("marker", _pts(xy), {"fill": fill}, radius=size))

    def text(self, at, label, fill="black"):
        self.shapes.append(_Shape("text", _pts([at]), {"fill": fill}, label=str(label)))

    def bounds(self):
        lo = np.array([np.inf, np.inf])
        hi = -lo
        for sh in self.shapes:
            pts = sh.xy
            if sh.kind == "circle":
                pts = np.vstack([pts - sh.radius, pts + sh.radius])
            lo = np.minimum(lo, pts.min(axis=0))
            hi = np.maximum(hi, pts.max(axis=0))
        if not np.isfinite(lo).all():
            return np.zeros(2), np.ones(2)
        span = np.maximum(hi - lo, 1e-12)
        pad = 0.05 * span
        return lo - pad, hi + pad

    def render(self) -> str:
        lo, hi = self.bounds()
        sx = (WIDTH - 2 * MARGIN) / (hi[0] - lo[0])
        sy = (HEIGHT - 2 * MARGIN) / (hi[1] - lo[1])
        if self.equal_aspect:
            sx = sy = min(sx, sy)

        def tr(p):
            p = np.atleast_2d(p)
            x = MARGIN + (p[:, 0] - lo[0]) * sx
            y = HEIGHT - MARGIN - (p[:, 1] - lo[1]) * sy
            return np.column_stack([x, y])

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
               f'viewBox="0 0 {WIDTH} {HEIGHT}">',
               f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
        for sh in self.shapes:
            st = _style(sh.style)
            q = tr(sh.xy)
            if sh.kind in ("polyline", "polygon"):
                pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in q)
                out.append(f'<{sh.kind} points="{pts}" {st}/>')
            elif sh.kind == "circle":
                rx, ry = sh.radius * sx, sh.radius * sy
                out.append(f'<ellipse cx="{q[0, 0]:.2f}" cy="{q[0, 1]:.2f}" '
                           f'rx="{rx:.2f}" ry="{ry:.2f}" {st}/>')
            elif sh.kind == "marker":
                for x, y in q:
                    out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{sh.radius:g}" {st}/>')
            elif sh.kind == "text":
                out.append(f'<text x="{q[0, 0]:.2f}" y="{q[0, 1]:.2f}" font-size="12" {st}>'
                           f'{escape(sh.label)}</text>')
        out += _axes(lo, hi, tr)
        if self.title:
            out.append(f'<text x="{WIDTH / 2}" y="24" font-size="16" text-anchor="middle">'
                       f'{escape(self.title)}</text>')
        if self.xlabel:
            out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" font-size="13" '
                       f'text-anchor="middle">{escape(self.xlabel)}</text>')
        if self.ylabel:
            out.append(f'<text x="14" y="{HEIGHT / 2}" font-size="13" text-anchor="middle" '
                       f'transform="rotate(-90 14 {HEIGHT / 2})">{escape(self.ylabel)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.render())


def _pts(xy) -> np.ndarray:
    a = np.asarray(xy, dtype=float)
    if a.ndim != 2 or a.shape[1] < 2:
        raise ValueError("expected an (n, 2) array of points")
    return a[:, :2]


def _style(style: dict) -> str:
    return " ".join(f"{k}={quoteattr(str(v))}" for k, v in style.items())


def _axes(lo, hi, tr):
    corners = tr(np.array([[lo[0], lo[1]], [hi[0], lo[1]], [lo[0], hi[1]]]))
    x0, y0 = corners[0]
    x1 = corners[1, 0]
    y1 = corners[2, 1]
    out = [f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y0:.2f}" stroke="#888"/>',
           f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x0:.2f}" y2="{y1:.2f}" stroke="#888"/>']
    for frac in (0.0, 0.5, 1.0):
        xv = lo[0] + frac * (hi[0] - lo[0])
        yv = lo[1] + frac * (hi[1] - lo[1])
        px = x0 + frac * (x1 - x0)
        py = y0 + frac * (y1 - y0)
        out.append(f'<text x="{px:.2f}" y="{y0 + 16:.2f}" font-size="11" '
                   f'text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{x0 - 4:.2f}" y="{py + 4:.2f}" font-size="11" '
                   f'text-anchor="end">{yv:.3g}</text>')
    return out
