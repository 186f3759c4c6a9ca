"""Hand-rolled SVG emission for charts and plane figures.

Every function here is a pure string builder: identical input produces
byte-identical output, which is what makes golden-file testing of the
plots possible.  Charting libraries were rejected for exactly this
reason; their SVG embeds generated ids and version strings that change
between runs and releases.

Numbers are written through one canonical formatter.  Infinities are
never written into coordinates; chart rows with value -inf are rendered
as floor markers instead of polyline vertices.
"""

from __future__ import annotations

import cmath
import math
from typing import Optional, Sequence

__all__ = [
    "SvgError",
    "line_chart",
    "plane_figure",
    "svg_document",
]

_AXIS = "#444444"
_TEXT = "#111111"
_LINE = "#1f4e79"
_HOLE = "#b04a4a"
_ARC = "#2e7d32"
_MARK = "#7a3b8f"

_FONT = 'font-family="DejaVu Sans, sans-serif"'


class SvgError(ValueError):
    """Raised for values the deterministic formatter refuses to draw."""


def _fmt(x: float) -> str:
    """Canonical coordinate/number format: shortest %.8g, no -0."""
    v = float(x)
    if not math.isfinite(v):
        raise SvgError(f"non-finite coordinate {v!r}")
    if v == 0.0:
        v = 0.0  # normalizes -0.0
    return format(v, ".8g")


def svg_document(width: float, height: float,
                 elements: Sequence[str]) -> str:
    head = (
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">'
    )
    return "\n".join([head, *elements, "</svg>"]) + "\n"


def _text(x: float, y: float, s: str, *, size: int = 12,
          anchor: str = "start", color: str = _TEXT) -> str:
    safe = (s.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))
    return (
        f'<text x="{_fmt(x)}" y="{_fmt(y)}" {_FONT} '
        f'font-size="{size}" text-anchor="{anchor}" '
        f'fill="{color}">{safe}</text>'
    )


def _tick_values(lo: float, hi: float, want: int = 5) -> list:
    """Round tick positions covering [lo, hi]; deterministic 1/2/5 grid."""
    if not lo < hi:
        return [lo]
    raw = (hi - lo) / max(1, want)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + step * 1e-9:
        out.append(0.0 if v == 0 else v)
        v += step
    return out or [lo]


def line_chart(points: Sequence, *, width: float = 640.0,
               height: float = 400.0, title: str = "",
               x_label: str = "", y_label: str = "",
               floor_markers: Sequence = ()) -> str:
    """Polyline chart of finite (x, y) pairs with axis ticks.

    floor_markers are x positions drawn as open triangles pinned to the
    chart floor and annotated "-inf"; they represent rows whose value is
    exactly minus infinity and therefore has no y coordinate.
    """
    pts = [(float(x), float(y)) for x, y in points]
    for x, y in pts:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise SvgError(f"non-finite chart point ({x!r}, {y!r})")
    floors = [float(x) for x in floor_markers]
    if not pts and not floors:
        raise SvgError("nothing to chart")

    left, right, top, bottom = 64.0, 20.0, 30.0, 46.0
    px0, px1 = left, width - right
    py0, py1 = height - bottom, top

    xs = [x for x, _ in pts] + floors
    ys = [y for _, y in pts] or [0.0]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_lo == x_hi:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    if y_lo == y_hi:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    x_pad = 0.04 * (x_hi - x_lo)
    y_pad = 0.06 * (y_hi - y_lo)
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    def mx(x: float) -> float:
        return px0 + (x - x_lo) / (x_hi - x_lo) * (px1 - px0)

    def my(y: float) -> float:
        return py0 - (y - y_lo) / (y_hi - y_lo) * (py0 - py1)

    el = [
        f'<rect x="0" y="0" width="{_fmt(width)}" height="{_fmt(height)}" '
        'fill="#ffffff"/>',
        f'<line x1="{_fmt(px0)}" y1="{_fmt(py0)}" x2="{_fmt(px1)}" '
        f'y2="{_fmt(py0)}" stroke="{_AXIS}" stroke-width="1"/>',
        f'<line x1="{_fmt(px0)}" y1="{_fmt(py0)}" x2="{_fmt(px0)}" '
        f'y2="{_fmt(py1)}" stroke="{_AXIS}" stroke-width="1"/>',
    ]
    for tv in _tick_values(x_lo, x_hi):
        x = mx(tv)
        el.append(
            f'<line x1="{_fmt(x)}" y1="{_fmt(py0)}" x2="{_fmt(x)}" '
            f'y2="{_fmt(py0 + 5)}" stroke="{_AXIS}" stroke-width="1"/>'
        )
        el.append(_text(x, py0 + 18, _fmt(tv), size=11, anchor="middle"))
    for tv in _tick_values(y_lo, y_hi):
        y = my(tv)
        el.append(
            f'<line x1="{_fmt(px0 - 5)}" y1="{_fmt(y)}" x2="{_fmt(px0)}" '
            f'y2="{_fmt(y)}" stroke="{_AXIS}" stroke-width="1"/>'
        )
        el.append(_text(px0 - 8, y + 4, _fmt(tv), size=11, anchor="end"))

    if len(pts) >= 2:
        path = " ".join(f"{_fmt(mx(x))},{_fmt(my(y))}" for x, y in pts)
        el.append(
            f'<polyline points="{path}" fill="none" stroke="{_LINE}" '
            'stroke-width="2"/>'
        )
    for x, y in pts:
        el.append(
            f'<circle cx="{_fmt(mx(x))}" cy="{_fmt(my(y))}" r="3" '
            f'fill="{_LINE}"/>'
        )
    for x in floors:
        cx, cy = mx(x), py0 - 6
        tri = (
            f"{_fmt(cx - 5)},{_fmt(cy - 8)} {_fmt(cx + 5)},{_fmt(cy - 8)} "
            f"{_fmt(cx)},{_fmt(cy)}"
        )
        el.append(
            f'<polygon points="{tri}" fill="none" stroke="{_MARK}" '
            'stroke-width="2"/>'
        )
        el.append(_text(cx, cy - 12, "-inf", size=11, anchor="middle",
                        color=_MARK))

    if title:
        el.append(_text(width / 2, 18, title, size=14, anchor="middle"))
    if x_label:
        el.append(_text((px0 + px1) / 2, height - 10, x_label, size=12,
                        anchor="middle"))
    if y_label:
        el.append(
            f'<text x="14" y="{_fmt((py0 + py1) / 2)}" {_FONT} '
            f'font-size="12" text-anchor="middle" fill="{_TEXT}" '
            f'transform="rotate(-90 14 {_fmt((py0 + py1) / 2)})">'
            f"{y_label}</text>"
        )
    return svg_document(width, height, el)


def _arc_polyline(rho: float, k0: int, n0: int, mx, my,
                  segments: int = 64) -> str:
    pts = []
    for i in range(segments + 1):
        turn = (k0 + i / segments) / n0
        z = rho * cmath.exp(2j * math.pi * turn)
        pts.append(f"{_fmt(mx(z.real))},{_fmt(my(z.imag))}")
    return " ".join(pts)


def plane_figure(*, rho: float, holes: Sequence = (),
                 arc: Optional[tuple] = None, points: Sequence = (),
                 size: float = 480.0, title: str = "") -> str:
    """Disc-of-radius-rho figure: outer circle, holes, arc, point marks.

    holes are (center_x, center_y, radius) triples drawn to true scale
    with a fixed-size center mark on top, so protection discs far below
    pixel size remain visible.  arc is (k0, n0) on the outer circle.
    """
    if not rho > 0:
        raise SvgError(f"outer radius must be positive, got {rho}")
    margin = 30.0
    span = 2.24 * rho
    scale = (size - 2 * margin) / span

    def mx(x: float) -> float:
        return size / 2 + scale * x

    def my(y: float) -> float:
        return size / 2 - scale * y

    el = [
        f'<rect x="0" y="0" width="{_fmt(size)}" height="{_fmt(size)}" '
        'fill="#ffffff"/>',
        f'<circle cx="{_fmt(mx(0))}" cy="{_fmt(my(0))}" '
        f'r="{_fmt(scale * rho)}" fill="none" stroke="{_LINE}" '
        'stroke-width="2"/>',
    ]
    for cx, cy, r in holes:
        el.append(
            f'<circle cx="{_fmt(mx(cx))}" cy="{_fmt(my(cy))}" '
            f'r="{_fmt(max(scale * r, 0.75))}" fill="none" '
            f'stroke="{_HOLE}" stroke-width="1"/>'
        )
        el.append(
            f'<circle cx="{_fmt(mx(cx))}" cy="{_fmt(my(cy))}" r="1.5" '
            f'fill="{_HOLE}"/>'
        )
    if arc is not None:
        k0, n0 = arc
        el.append(
            f'<polyline points="{_arc_polyline(rho, k0, n0, mx, my)}" '
            f'fill="none" stroke="{_ARC}" stroke-width="4"/>'
        )
    for px, py in points:
        el.append(
            f'<circle cx="{_fmt(mx(px))}" cy="{_fmt(my(py))}" r="2.5" '
            f'fill="{_MARK}"/>'
        )
    if title:
        el.append(_text(size / 2, 20, title, size=14, anchor="middle"))
    return svg_document(size, size, el)
