"""Render a partition layer (plus optional per-polygon values and highlight
points) as a static SVG map.

Output is deterministic: fixed viewport, fixed float formatting, input
order preserved. Latitude is flipped so north is up.
"""

from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple

from .core import InvalidParameterError
from .store import PartitionLayer

__all__ = ["render_svg"]

_WIDTH = 800.0
_MARGIN = 12.0
_MIN_OPACITY = 0.08
_OPACITY_SPAN = 0.72
_FLAT_OPACITY = 0.4
_POINT_RADIUS = 4.0


def _bounds(layer: PartitionLayer, points: Sequence[Tuple[float, float]]):
    xs: List[float] = [x for p in layer.polygons for x, _ in p.exterior]
    ys: List[float] = [y for p in layer.polygons for _, y in p.exterior]
    xs += [x for x, _ in points]
    ys += [y for _, y in points]
    if not xs:
        raise InvalidParameterError("nothing to draw")
    return min(xs), min(ys), max(xs), max(ys)


def _opacities(values: Optional[Sequence[float]], n: int) -> List[float]:
    if values is None:
        return [_FLAT_OPACITY] * n
    if len(values) != n:
        raise InvalidParameterError(
            f"{len(values)} values for {n} polygons"
        )
    vals = [float(v) for v in values]
    if any(not math.isfinite(v) for v in vals):
        raise InvalidParameterError("polygon values must be finite")
    lo, hi = min(vals), max(vals)
    if hi == lo:
        return [_FLAT_OPACITY] * n
    return [_MIN_OPACITY + _OPACITY_SPAN * (v - lo) / (hi - lo) for v in vals]


def render_svg(
    layer: PartitionLayer,
    values: Optional[Sequence[float]] = None,
    points: Sequence[Tuple[float, float]] = (),
) -> str:
    """Return the SVG document as a string.

    `values` shade polygon fills (linear ramp over the value range);
    `points` are (lon, lat) highlight markers drawn on top.
    """
    pts = [(float(x), float(y)) for x, y in points]
    min_x, min_y, max_x, max_y = _bounds(layer, pts)
    span_x = max(max_x - min_x, 1e-9)
    span_y = max(max_y - min_y, 1e-9)
    scale = (_WIDTH - 2 * _MARGIN) / span_x
    height = span_y * scale + 2 * _MARGIN

    def project(lon: float, lat: float) -> Tuple[float, float]:
        # y flipped: larger latitude plots nearer the top
        return (
            _MARGIN + (lon - min_x) * scale,
            _MARGIN + (max_y - lat) * scale,
        )

    def ring_path(ring) -> str:
        cmds = []
        for i, (lon, lat) in enumerate(ring):
            x, y = project(lon, lat)
            cmds.append(f"{'M' if i == 0 else 'L'} {x:.2f} {y:.2f}")
        cmds.append("Z")
        return " ".join(cmds)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH:.0f}" '
        f'height="{height:.2f}" viewBox="0 0 {_WIDTH:.0f} {height:.2f}">'
    ]
    for poly, opacity in zip(layer.polygons, _opacities(values, len(layer.polygons))):
        d = " ".join(ring_path(r) for r in (poly.exterior, *poly.holes))
        lines.append(
            f'  <path d="{d}" fill="#1f77b4" fill-opacity="{opacity:.3f}" '
            f'stroke="#222222" stroke-width="1" fill-rule="evenodd" />'
        )
    for lon, lat in pts:
        x, y = project(lon, lat)
        lines.append(
            f'  <circle cx="{x:.2f}" cy="{y:.2f}" r="{_POINT_RADIUS:.0f}" '
            f'fill="#d62728" stroke="#ffffff" stroke-width="1" />'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
