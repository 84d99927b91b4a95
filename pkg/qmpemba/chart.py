"""Standalone SVG line charts."""

from __future__ import annotations

import logging
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from qmpemba.circuit import TimeSeries
from qmpemba.errors import InvalidArgumentError

__all__ = ["PALETTE", "parse_color", "nice_ticks", "emit_svg"]

logger = logging.getLogger(__name__)

PALETTE = {
    "blue": (31, 119, 180),
    "orange": (255, 127, 14),
    "green": (44, 160, 44),
    "red": (214, 39, 40),
    "purple": (148, 103, 189),
    "brown": (140, 86, 75),
    "pink": (227, 119, 194),
    "gray": (127, 127, 127),
    "olive": (188, 189, 34),
    "cyan": (23, 190, 207),
}

_WIDTH, _HEIGHT = 720, 450
_MARGIN_LEFT, _MARGIN_RIGHT, _MARGIN_TOP, _MARGIN_BOTTOM = 70, 170, 30, 50


def parse_color(value) -> tuple[int, int, int]:
    """RGB from ``#RRGGBB``, ``0xRRGGBB``, a palette name or a 3-sequence."""
    if isinstance(value, str):
        s = value.strip()
        if s.startswith("#") or s.lower().startswith("0x"):
            h = s[1:] if s.startswith("#") else s[2:]
            if len(h) != 6:
                raise InvalidArgumentError(f"invalid hex color: {value!r}")
            return int(h[0:2], 16), int(h[2:4], 16), int(h[4:6], 16)
        key = s.lower().replace(" ", "")
        if key not in PALETTE:
            raise InvalidArgumentError(f"unknown color name: {value!r}")
        return PALETTE[key]
    if len(value) != 3:
        raise InvalidArgumentError(f"color needs 3 components, got {value!r}")
    return tuple(max(0, min(255, int(c))) for c in value)


def _hex(rgb: tuple[int, int, int]) -> str:
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Round tick positions covering ``[lo, hi]``."""
    if hi < lo:
        lo, hi = hi, lo
    if hi - lo <= 1e-9 * max(abs(lo), abs(hi), 1.0):
        lo = hi = (lo + hi) / 2.0
        pad = abs(lo) * 0.1 if abs(lo) > 1e-9 else 1.0
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.floor(lo / step) * step
    ticks = []
    k = 0
    while first + k * step <= hi + 1e-9 * step:
        ticks.append(round(first + k * step, 12))
        k += 1
    if ticks[0] > lo:
        ticks.insert(0, ticks[0] - step)
    if ticks[-1] < hi:
        ticks.append(ticks[-1] + step)
    return sorted(set(ticks))


@dataclass(frozen=True, slots=True)
class _Frame:
    """Plot area in pixels and the data range it shows."""

    left: float
    top: float
    width: float
    height: float
    x0: float
    x1: float
    y0: float
    y1: float

    @property
    def right(self) -> float:
        return self.left + self.width

    @property
    def bottom(self) -> float:
        return self.top + self.height

    def px(self, x: float) -> float:
        span = self.x1 - self.x0
        if span <= 0:
            return self.left + self.width / 2
        return self.left + (x - self.x0) / span * self.width

    def py(self, y: float) -> float:
        span = self.y1 - self.y0
        if span <= 0:
            return self.top + self.height / 2
        return self.bottom - (y - self.y0) / span * self.height


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _tick_label(v: float) -> str:
    return f"{v:.6g}"


def emit_svg(series: Sequence[TimeSeries], path: str | Path, title: str = "",
             xlabel: str = "t", ylabel: str = "",
             colors: Sequence | None = None) -> Path:
    """Write one polyline per series with a legend and linear axes."""
    series = [s for s in series]
    if not series:
        raise InvalidArgumentError("emit_svg needs at least one series")
    xs = np.concatenate([s.times for s in series])
    ys = np.concatenate([s.mean for s in series])
    finite = np.isfinite(ys)
    if xs.size == 0 or not finite.any():
        raise InvalidArgumentError("series contain no finite points to plot")
    xticks = nice_ticks(float(xs.min()), float(xs.max()))
    yticks = nice_ticks(float(ys[finite].min()), float(ys[finite].max()))
    frame = _Frame(_MARGIN_LEFT, _MARGIN_TOP,
                   _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT,
                   _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM,
                   xticks[0], xticks[-1], yticks[0], yticks[-1])
    palette = [parse_color(c) for c in (colors or PALETTE.values())]

    svg = ET.Element("svg", {
        "xmlns": "http://www.w3.org/2000/svg",
        "width": str(_WIDTH), "height": str(_HEIGHT),
        "viewBox": f"0 0 {_WIDTH} {_HEIGHT}",
        "font-family": "sans-serif", "font-size": "12",
    })
    ET.SubElement(svg, "rect", {"x": "0", "y": "0", "width": str(_WIDTH),
                                "height": str(_HEIGHT), "fill": "#ffffff"})
    if title:
        ET.SubElement(svg, "text", {"x": _fmt(frame.left), "y": "20",
                                    "font-size": "14"}).text = title

    axes = ET.SubElement(svg, "g", {"class": "axes", "stroke": "#000000"})
    ET.SubElement(axes, "rect", {"x": _fmt(frame.left), "y": _fmt(frame.top),
                                 "width": _fmt(frame.width), "height": _fmt(frame.height),
                                 "fill": "none"})
    labels = ET.SubElement(svg, "g", {"class": "ticks", "fill": "#000000"})
    for v in xticks:
        x = _fmt(frame.px(v))
        ET.SubElement(axes, "line", {"x1": x, "x2": x, "y1": _fmt(frame.bottom),
                                     "y2": _fmt(frame.bottom + 5)})
        ET.SubElement(labels, "text", {"x": x, "y": _fmt(frame.bottom + 18),
                                       "text-anchor": "middle"}).text = _tick_label(v)
    for v in yticks:
        y = _fmt(frame.py(v))
        ET.SubElement(axes, "line", {"x1": _fmt(frame.left - 5), "x2": _fmt(frame.left),
                                     "y1": y, "y2": y})
        ET.SubElement(labels, "text", {"x": _fmt(frame.left - 8), "y": y,
                                       "text-anchor": "end",
                                       "dominant-baseline": "middle"}).text = _tick_label(v)
    ET.SubElement(labels, "text", {"x": _fmt(frame.left + frame.width / 2),
                                   "y": _fmt(_HEIGHT - 10),
                                   "text-anchor": "middle"}).text = xlabel
    if ylabel:
        cy = _fmt(frame.top + frame.height / 2)
        ET.SubElement(labels, "text", {"x": "15", "y": cy, "text-anchor": "middle",
                                       "transform": f"rotate(-90 15 {cy})"}).text = ylabel

    lines = ET.SubElement(svg, "g", {"class": "series", "fill": "none",
                                     "stroke-width": "1.5"})
    legend = ET.SubElement(svg, "g", {"class": "legend"})
    for k, s in enumerate(series):
        color = _hex(palette[k % len(palette)])
        order = np.argsort(s.times, kind="stable")
        pts = " ".join(f"{_fmt(frame.px(s.times[i]))},{_fmt(frame.py(s.mean[i]))}"
                       for i in order if np.isfinite(s.mean[i]))
        ET.SubElement(lines, "polyline", {"points": pts, "stroke": color})
        ly = frame.top + 10 + 18 * k
        lx = frame.right + 15
        ET.SubElement(legend, "line", {"x1": _fmt(lx), "x2": _fmt(lx + 20),
                                       "y1": _fmt(ly), "y2": _fmt(ly),
                                       "stroke": color, "stroke-width": "2"})
        ET.SubElement(legend, "text", {"x": _fmt(lx + 26), "y": _fmt(ly),
                                       "dominant-baseline": "middle"}).text = (
            s.label or f"series {k + 1}")

    path = Path(path)
    ET.ElementTree(svg).write(path, encoding="utf-8", xml_declaration=True)
    logger.info("wrote %s (%d series)", path, len(series))
    return path
