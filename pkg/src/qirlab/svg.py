"""Minimal static SVG charts: lines, shaded bands and scatter points on a panel grid."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f4e79", "#c0392b", "#2e7d32", "#7b1fa2", "#ef6c00", "#455a64")
PANEL_W, PANEL_H = 380, 270
MARGIN = dict(left=56, right=14, top=30, bottom=42)


@dataclass
class Layer:
    kind: str  # "line", "band" or "points"
    x: np.ndarray
    y: np.ndarray
    y2: np.ndarray | None = None
    label: str | None = None
    color: str = PALETTE[0]
    dashed: bool = False
    opacity: float = 0.25

    def __post_init__(self):
        if self.kind not in ("line", "band", "points"):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.y2 is not None:
            self.y2 = np.asarray(self.y2, dtype=float)
        if self.kind == "band" and self.y2 is None:
            raise ValueError("band layers need y2")


@dataclass
class Chart:
    title: str
    layers: list[Layer] = field(default_factory=list)
    xlabel: str = ""
    ylabel: str = ""
    zero_line: bool = True


def nice_ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        lo, hi = 0.0, 1.0
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    raw = (hi - lo) / max(n, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step) * step
    stop = math.ceil(hi / step) * step
    return np.round(np.arange(start, stop + step / 2, step), 10)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _label(v: float) -> str:
    s = f"{v:.6g}"
    return "0" if s in ("-0", "0") else s


def _render_chart(chart: Chart, ox: float, oy: float) -> list[str]:
    xs = [l.x[np.isfinite(l.x)] for l in chart.layers]
    ys = [l.y[np.isfinite(l.y)] for l in chart.layers]
    ys += [l.y2[np.isfinite(l.y2)] for l in chart.layers if l.y2 is not None]
    xs = np.concatenate(xs) if xs else np.array([0.0, 1.0])
    ys = np.concatenate(ys) if ys else np.array([0.0, 1.0])
    if chart.zero_line:
        ys = np.append(ys, 0.0)
    xs = xs if xs.size else np.array([0.0, 1.0])
    ys = ys if ys.size else np.array([0.0, 1.0])
    xt = nice_ticks(xs.min(), xs.max())
    yt = nice_ticks(ys.min(), ys.max())
    x0, x1, y0, y1 = xt[0], xt[-1], yt[0], yt[-1]
    left, top = ox + MARGIN["left"], oy + MARGIN["top"]
    w = PANEL_W - MARGIN["left"] - MARGIN["right"]
    h = PANEL_H - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return left + (x - x0) / (x1 - x0) * w

    def py(y):
        return top + h - (y - y0) / (y1 - y0) * h

    out = [f'<g class="chart">', f'<text x="{_fmt(ox + PANEL_W / 2)}" y="{_fmt(oy + 18)}" '
           f'text-anchor="middle" font-size="13">{escape(chart.title)}</text>']
    out.append(f'<rect x="{_fmt(left)}" y="{_fmt(top)}" width="{_fmt(w)}" height="{_fmt(h)}" '
               'fill="none" stroke="#999"/>')
    for t in xt:
        out.append(f'<line x1="{_fmt(px(t))}" y1="{_fmt(top + h)}" x2="{_fmt(px(t))}" y2="{_fmt(top + h + 4)}" stroke="#555"/>')
        out.append(f'<text x="{_fmt(px(t))}" y="{_fmt(top + h + 16)}" text-anchor="middle" font-size="10">{_label(t)}</text>')
    for t in yt:
        out.append(f'<line x1="{_fmt(left - 4)}" y1="{_fmt(py(t))}" x2="{_fmt(left)}" y2="{_fmt(py(t))}" stroke="#555"/>')
        out.append(f'<text x="{_fmt(left - 6)}" y="{_fmt(py(t) + 3)}" text-anchor="end" font-size="10">{_label(t)}</text>')
    if chart.zero_line and y0 < 0 < y1:
        out.append(f'<line x1="{_fmt(left)}" y1="{_fmt(py(0))}" x2="{_fmt(left + w)}" y2="{_fmt(py(0))}" stroke="#000" stroke-width="0.6"/>')
    if chart.xlabel:
        out.append(f'<text x="{_fmt(left + w / 2)}" y="{_fmt(oy + PANEL_H - 6)}" text-anchor="middle" font-size="11">{escape(chart.xlabel)}</text>')
    if chart.ylabel:
        cx, cy = ox + 12, top + h / 2
        out.append(f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" text-anchor="middle" font-size="11" '
                   f'transform="rotate(-90 {_fmt(cx)} {_fmt(cy)})">{escape(chart.ylabel)}</text>')

    for layer in chart.layers:
        ok = np.isfinite(layer.x) & np.isfinite(layer.y)
        if layer.y2 is not None:
            ok &= np.isfinite(layer.y2)
        x, y = layer.x[ok], layer.y[ok]
        if layer.kind == "band":
            y2 = layer.y2[ok]
            pts = [(px(a), py(b)) for a, b in zip(x, y)] + [(px(a), py(b)) for a, b in zip(x[::-1], y2[::-1])]
            if pts:
                out.append(f'<polygon points="{" ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in pts)}" '
                           f'fill="{layer.color}" fill-opacity="{layer.opacity}" stroke="none"/>')
        elif layer.kind == "line":
            if x.size:
                dash = ' stroke-dasharray="5,3"' if layer.dashed else ""
                out.append(f'<polyline points="{" ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))}" '
                           f'fill="none" stroke="{layer.color}" stroke-width="1.6"{dash}/>')
        else:
            out.extend(f'<circle cx="{_fmt(px(a))}" cy="{_fmt(py(b))}" r="2" fill="{layer.color}"/>' for a, b in zip(x, y))

    labelled = [l for l in chart.layers if l.label]
    for i, layer in enumerate(labelled):
        lx, ly = left + 8, top + 12 + 13 * i
        out.append(f'<line x1="{_fmt(lx)}" y1="{_fmt(ly - 3)}" x2="{_fmt(lx + 16)}" y2="{_fmt(ly - 3)}" '
                   f'stroke="{layer.color}" stroke-width="{6 if layer.kind == "band" else 2}"/>')
        out.append(f'<text x="{_fmt(lx + 20)}" y="{_fmt(ly)}" font-size="10">{escape(layer.label)}</text>')
    out.append("</g>")
    return out


def render(charts: list[Chart], ncols: int = 2, title: str | None = None, meta: dict | None = None) -> str:
    """SVG document laying ``charts`` out on a grid, with ``meta`` as JSON in <metadata>."""
    ncols = max(1, min(ncols, len(charts) or 1))
    nrows = max(1, math.ceil(len(charts) / ncols))
    head = 28 if title else 0
    width, height = ncols * PANEL_W, nrows * PANEL_H + head
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif">']
    if meta is not None:
        out.append(f"<metadata>{escape(json.dumps(meta, sort_keys=True))}</metadata>")
    out.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    if title:
        out.append(f'<text x="{width / 2:.2f}" y="20" text-anchor="middle" font-size="15">{escape(title)}</text>')
    for i, chart in enumerate(charts):
        out.extend(_render_chart(chart, (i % ncols) * PANEL_W, head + (i // ncols) * PANEL_H))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, charts: list[Chart], ncols: int = 2, title: str | None = None, meta: dict | None = None) -> Path:
    path = Path(path)
    path.write_text(render(charts, ncols, title, meta))
    return path
