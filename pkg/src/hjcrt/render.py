"""Contour drawings of 2-D slices as standalone SVG documents."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np
from skimage.measure import find_contours

from .grid import ValueField
from .sets import LevelMask

WIDTH, HEIGHT, MARGIN = 480, 480, 60
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


class RenderError(ValueError):
    pass


def take_slice(obj, fixed: dict):
    """Reduce a field or mask to a 2-D array by pinning axes to their nearest nodes.

    Returns ``(array, free_axes, pinned)`` where ``pinned`` maps each fixed
    axis to the node coordinate actually used.
    """
    grid = obj.grid
    data = obj.values if isinstance(obj, ValueField) else obj.member.astype(float)
    fixed = {int(k): float(v) for k, v in fixed.items()}
    for axis in fixed:
        if not 0 <= axis < grid.ndim:
            raise RenderError(f"axis {axis} does not exist in a {grid.ndim}-D grid")
    free = [i for i in range(grid.ndim) if i not in fixed]
    if len(free) != 2:
        raise RenderError(f"need exactly 2 free dimensions after fixing axes, got {len(free)}")
    index: list = [slice(None)] * grid.ndim
    pinned = {}
    for axis, value in fixed.items():
        coords = grid.axis(axis)
        if grid.periodic[axis]:
            period = grid.hi[axis] - grid.lo[axis]
            # nearest node on the circle
            gap = np.abs((coords - value + period / 2) % period - period / 2)
        else:
            gap = np.abs(coords - value)
        k = int(np.argmin(gap))
        index[axis] = k
        pinned[axis] = float(coords[k])
    return data[tuple(index)], free, pinned


def render_slice(obj, fixed: dict | None = None, levels=None, title: str = "") -> str:
    """SVG of contour lines of a field slice (or the boundary of a mask slice)."""
    fixed = fixed or {}
    grid = obj.grid
    array, (ax0, ax1), pinned = take_slice(obj, fixed)
    if isinstance(obj, LevelMask):
        levels = [0.5]
        labels = [f"mask boundary (level {obj.level:g})"]
    else:
        levels = [float(v) for v in (levels or [])]
        labels = [f"level {v:g}" for v in levels]
    x0, x1 = grid.lo[ax0], grid.axis(ax0)[-1]
    y0, y1 = grid.lo[ax1], grid.axis(ax1)[-1]
    dx, dy = grid.spacing[ax0], grid.spacing[ax1]
    plot_w, plot_h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def to_px(i, j):
        x = grid.lo[ax0] + i * dx
        y = grid.lo[ax1] + j * dy
        return MARGIN + (x - x0) / (x1 - x0) * plot_w, HEIGHT - MARGIN - (y - y0) / (y1 - y0) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 15}" text-anchor="middle" font-size="14">x{ax0}</text>',
        f'<text x="15" y="{HEIGHT / 2}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 15 {HEIGHT / 2})">x{ax1}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv, yv = x0 + frac * (x1 - x0), y0 + frac * (y1 - y0)
        px, py = MARGIN + frac * plot_w, HEIGHT - MARGIN - frac * plot_h
        parts.append(f'<text x="{px:.1f}" y="{HEIGHT - MARGIN + 18}" text-anchor="middle" font-size="11">{xv:.3g}</text>')
        parts.append(f'<text x="{MARGIN - 6}" y="{py + 4:.1f}" text-anchor="end" font-size="11">{yv:.3g}</text>')
    caption = title or ", ".join(f"x{k}={v:.4g}" for k, v in sorted(pinned.items()))
    if caption:
        parts.append(f'<text x="{WIDTH / 2}" y="{MARGIN - 20}" text-anchor="middle" font-size="13">'
                     f'{escape(caption)}</text>')
    for n, (level, label) in enumerate(zip(levels, labels)):
        color = PALETTE[n % len(PALETTE)]
        parts.append(f'<g class="contour" stroke="{color}" fill="none" stroke-width="1.5">'
                     f'<title>{escape(label)}</title>')
        for line in find_contours(array, level):
            points = " ".join("%.2f,%.2f" % to_px(i, j) for i, j in line)
            parts.append(f'<polyline points="{points}"/>')
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
