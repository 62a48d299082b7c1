"""Sublevel masks and set comparisons on a grid.

Set volume is the node count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, ValueField


class GridMismatchError(ValueError):
    pass


@dataclass
class LevelMask:
    grid: Grid
    member: np.ndarray
    level: float = float("nan")
    source: str = ""

    def __post_init__(self):
        member = np.asarray(self.member, dtype=bool)
        if member.size != self.grid.size:
            raise ValueError(f"mask has {member.size} entries, grid has {self.grid.size} nodes")
        self.member = member.reshape(self.grid.shape)

    @property
    def count(self) -> int:
        return int(self.member.sum())


def sublevel(field: ValueField, level: float, source: str = "") -> LevelMask:
    level = float(level)
    if not np.isfinite(level):
        raise ValueError(f"level must be finite, got {level}")
    return LevelMask(field.grid, field.values <= level, level, source or field.meta.get("mode", ""))


def _check_same_grid(x: LevelMask, y: LevelMask):
    if x.grid != y.grid:
        raise GridMismatchError(f"masks live on different grids: {x.grid} vs {y.grid}")


def jaccard_error(x: LevelMask, y: LevelMask) -> float:
    """``1 - |X & Y| / |X | Y|``; 0 when both masks are empty."""
    _check_same_grid(x, y)
    union = np.count_nonzero(x.member | y.member)
    if union == 0:
        return 0.0
    return 1.0 - np.count_nonzero(x.member & y.member) / union


def rasterize_analytic(grid: Grid, predicate, source: str = "analytic", level: float = float("nan")) -> LevelMask:
    member = np.asarray(predicate(grid.states()), dtype=bool)
    return LevelMask(grid, np.broadcast_to(member, grid.shape), level, source)


def nesting_check(masks) -> bool:
    """True iff each mask is a subset of the next."""
    masks = list(masks)
    for x, y in zip(masks, masks[1:]):
        _check_same_grid(x, y)
        if np.any(x.member & ~y.member):
            return False
    return True


def dilate(grid: Grid, member: np.ndarray, cells: int = 1) -> np.ndarray:
    """Grow a boolean node set by ``cells`` in the max-norm (periodic dims wrap)."""
    out = np.asarray(member, dtype=bool).reshape(grid.shape)
    for _ in range(cells):
        for i in range(grid.ndim):
            out = out | _shift(out, 1, i, grid.periodic[i]) | _shift(out, -1, i, grid.periodic[i])
    return out


def erode(grid: Grid, member: np.ndarray, cells: int = 1, edge_inside: bool = False) -> np.ndarray:
    """Shrink a boolean node set in the max-norm.

    Beyond a non-periodic edge counts as outside unless ``edge_inside``.
    """
    out = np.asarray(member, dtype=bool).reshape(grid.shape)
    for _ in range(cells):
        for i in range(grid.ndim):
            per = grid.periodic[i]
            out = out & _shift(out, 1, i, per, edge_inside) & _shift(out, -1, i, per, edge_inside)
    return out


def _shift(a, shift, axis, periodic, fill=False):
    if periodic:
        return np.roll(a, shift, axis=axis)
    out = np.full_like(a, fill)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if shift > 0:
        src[axis] = slice(0, -shift)
        dst[axis] = slice(shift, None)
    else:
        src[axis] = slice(-shift, None)
        dst[axis] = slice(0, shift)
    out[tuple(dst)] = a[tuple(src)]
    return out


def boundary_band(mask: LevelMask, cells: int = 1) -> np.ndarray:
    """Nodes within ``cells`` of the mask boundary, on either side.

    The domain edge is not a mask boundary.
    """
    return dilate(mask.grid, mask.member, cells) & ~erode(mask.grid, mask.member, cells, edge_inside=True)


def within_band(x: LevelMask, y: LevelMask, cells: int = 1) -> bool:
    """Whether the symmetric difference of two masks lies within ``cells`` of x's boundary."""
    _check_same_grid(x, y)
    diff = x.member ^ y.member
    return not np.any(diff & ~boundary_band(x, cells))


def symmetric_difference_report(x: LevelMask, y: LevelMask) -> dict:
    _check_same_grid(x, y)
    diff = x.member ^ y.member
    report = {"e_vol": jaccard_error(x, y), "sym_diff_nodes": int(diff.sum()),
              "count_a": x.count, "count_b": y.count, "bbox": []}
    if diff.any():
        idx = np.argwhere(diff)
        for i in range(x.grid.ndim):
            axis = x.grid.axis(i)
            report["bbox"].append((float(axis[idx[:, i].min()]), float(axis[idx[:, i].max()])))
    return report
