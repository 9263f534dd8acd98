"""Static SVG rendering of the uncertainty-perception plane."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 440
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 40, 55

REGION_FILL = {
    "impossible": "#f4c7c3",
    "optimal": "#c8e6c9",
    "suboptimal": "#e0e0e0",
}
POINT_FILL = {"impossible": "#c62828", "optimal": "#2e7d32", "suboptimal": "#616161", None: "#1565c0"}


@dataclass(frozen=True)
class PlaneCurve:
    """Lower and upper region boundaries sampled on a perception grid."""

    perception: Sequence[float]
    lower: Sequence[float]
    upper: Sequence[float]
    label: str = ""


@dataclass(frozen=True)
class PlanePoint:
    perception: float
    uncertainty: float
    label: str
    region: Optional[str] = None


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 12))
        v += step
    return out


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _num(v: float) -> str:
    return f"{v:.4g}"


def plane_svg(curves: Sequence[PlaneCurve], points: Sequence[PlanePoint] = (), *,
              title: str = "Uncertainty-perception plane", x_label: str = "perception P",
              timestamp: Optional[str] = None) -> str:
    """Render region boundaries and labelled points as an SVG document.

    The first curve defines the shaded impossible / optimal / suboptimal
    regions; further curves are drawn as extra boundary lines. Points beyond
    the plotted perception range are pinned to the right edge.
    """
    if not curves:
        raise ValueError("at least one curve is required")
    xs = [p for c in curves for p in c.perception]
    ys = [u for c in curves for u in list(c.lower) + list(c.upper)]
    ys += [pt.uncertainty for pt in points if math.isfinite(pt.uncertainty)]
    x_lo, x_hi = min(xs), max(xs)
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    y_hi = max(ys) * 1.15 if ys and max(ys) > 0 else 1.0
    y_lo = 0.0
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(p):
        return LEFT + pw * (min(max(p, x_lo), x_hi) - x_lo) / (x_hi - x_lo)

    def sy(u):
        return TOP + ph * (1.0 - (min(max(u, y_lo), y_hi) - y_lo) / (y_hi - y_lo))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
    ]
    if timestamp:
        out.append(f"<!-- generated {escape(timestamp)} -->")
    out.append(f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')

    base = curves[0]
    lower = [(sx(p), sy(u)) for p, u in zip(base.perception, base.lower)]
    upper = [(sx(p), sy(u)) for p, u in zip(base.perception, base.upper)]
    bottom, top = sy(y_lo), sy(y_hi)

    def poly(pts, fill, name):
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        return f'<polygon class="region-{name}" points="{coords}" fill="{fill}" stroke="none"/>'

    out.append(poly(lower + [(lower[-1][0], bottom), (lower[0][0], bottom)], REGION_FILL["impossible"], "impossible"))
    out.append(poly(upper + lower[::-1], REGION_FILL["optimal"], "optimal"))
    out.append(poly(upper + [(upper[-1][0], top), (upper[0][0], top)], REGION_FILL["suboptimal"], "suboptimal"))

    mid = len(lower) // 2
    out.append(f'<text x="{_fmt(lower[mid][0])}" y="{_fmt(0.5 * (lower[mid][1] + bottom))}" '
               'text-anchor="middle" fill="#8e2b23">Impossible</text>')
    out.append(f'<text x="{_fmt(upper[mid][0])}" y="{_fmt(0.5 * (upper[mid][1] + top))}" '
               'text-anchor="middle" fill="#424242">Suboptimal</text>')
    opt_y = 0.5 * (lower[mid][1] + upper[mid][1])
    out.append(f'<text x="{_fmt(lower[mid][0])}" y="{_fmt(opt_y)}" text-anchor="middle" '
               'fill="#1b5e20">Optimal</text>')

    palette = ["#000000", "#1565c0", "#6a1b9a", "#ef6c00", "#00838f"]
    for i, c in enumerate(curves):
        colour = palette[i % len(palette)]
        for name, values, dash in (("lower", c.lower, ""), ("upper", c.upper, ' stroke-dasharray="5,3"')):
            coords = " ".join(f"{_fmt(sx(p))},{_fmt(sy(u))}" for p, u in zip(c.perception, values))
            out.append(f'<polyline class="curve-{name}" points="{coords}" fill="none" '
                       f'stroke="{colour}" stroke-width="1.5"{dash}/>')
        if c.label:
            out.append(f'<text x="{_fmt(WIDTH - RIGHT - 4)}" y="{_fmt(TOP + 14 + 14 * i)}" '
                       f'text-anchor="end" fill="{colour}">{escape(c.label)}</text>')

    # axes and ticks
    out.append(f'<line x1="{LEFT}" y1="{_fmt(bottom)}" x2="{LEFT + pw}" y2="{_fmt(bottom)}" stroke="black"/>')
    out.append(f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{_fmt(bottom)}" stroke="black"/>')
    for t in _ticks(x_lo, x_hi):
        x = sx(t)
        out.append(f'<line x1="{_fmt(x)}" y1="{_fmt(bottom)}" x2="{_fmt(x)}" y2="{_fmt(bottom + 5)}" stroke="black"/>')
        out.append(f'<text x="{_fmt(x)}" y="{_fmt(bottom + 18)}" text-anchor="middle">{_num(t)}</text>')
    for t in _ticks(y_lo, y_hi):
        y = sy(t)
        out.append(f'<line x1="{LEFT - 5}" y1="{_fmt(y)}" x2="{LEFT}" y2="{_fmt(y)}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{_fmt(y + 4)}" text-anchor="end">{_num(t)}</text>')
    out.append(f'<text x="{_fmt(LEFT + pw / 2)}" y="{HEIGHT - 12}" text-anchor="middle">{escape(x_label)}</text>')
    out.append(f'<text transform="translate(16,{_fmt(TOP + ph / 2)}) rotate(-90)" '
               'text-anchor="middle">uncertainty (error entropy power)</text>')

    for pt in points:
        clipped = pt.perception > x_hi
        x, y = sx(pt.perception), sy(pt.uncertainty)
        fill = POINT_FILL.get(pt.region, POINT_FILL[None])
        region = f' data-region="{escape(pt.region)}"' if pt.region else ""
        out.append(f'<circle class="point" cx="{_fmt(x)}" cy="{_fmt(y)}" r="4" fill="{fill}"'
                   f' data-perception="{pt.perception!r}" data-uncertainty="{pt.uncertainty!r}"{region}/>')
        text = pt.label + (f" (P={_num(pt.perception)}, off scale)" if clipped else "")
        anchor = "end" if clipped else "start"
        dx = -7 if clipped else 7
        out.append(f'<text x="{_fmt(x + dx)}" y="{_fmt(y - 6)}" text-anchor="{anchor}">{escape(text)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
