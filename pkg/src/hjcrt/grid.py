"""Cartesian grids and nodal value fields.

Nodes are stored row-major with the last dimension varying fastest, i.e. a
field's ``values`` array has shape ``grid.shape`` in C order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_DIMS = 4


@dataclass(frozen=True)
class Grid:
    """Rectangular lattice over ``[lo, hi]`` per dimension.

    Non-periodic dimensions include both endpoints as nodes. Periodic
    dimensions use cell-style spacing ``(hi - lo) / count`` so that ``hi`` is
    the wrap point of node 0 and is not duplicated.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    counts: tuple[int, ...]
    periodic: tuple[bool, ...] = ()

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        counts = tuple(int(c) for c in self.counts)
        periodic = tuple(bool(p) for p in self.periodic) or (False,) * len(counts)
        if not (len(lo) == len(hi) == len(counts) == len(periodic)):
            raise ValueError("lo, hi, counts and periodic must have equal length")
        if not 1 <= len(counts) <= MAX_DIMS:
            raise ValueError(f"grid dimension must be in 1..{MAX_DIMS}, got {len(counts)}")
        for i, (a, b, n) in enumerate(zip(lo, hi, counts)):
            if not a < b:
                raise ValueError(f"dimension {i}: lower bound {a} not below upper bound {b}")
            if n < 3:
                raise ValueError(f"dimension {i}: need at least 3 nodes, got {n}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "periodic", periodic)

    @property
    def ndim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def spacing(self) -> np.ndarray:
        lo, hi, n = np.array(self.lo), np.array(self.hi), np.array(self.counts)
        per = np.array(self.periodic)
        return np.where(per, (hi - lo) / n, (hi - lo) / (n - 1))

    def axis(self, i: int) -> np.ndarray:
        """Node coordinates along dimension ``i``."""
        n = self.counts[i]
        if self.periodic[i]:
            return self.lo[i] + np.arange(n) * self.spacing[i]
        # linspace hits both endpoints exactly
        return np.linspace(self.lo[i], self.hi[i], n)

    def states(self) -> np.ndarray:
        """All node states as an array of shape ``(ndim, *shape)``."""
        return np.stack(np.meshgrid(*(self.axis(i) for i in range(self.ndim)), indexing="ij"))

    def node_to_state(self, index) -> np.ndarray:
        index = tuple(int(k) for k in index)
        if len(index) != self.ndim:
            raise IndexError(f"expected {self.ndim} indices, got {len(index)}")
        for i, k in enumerate(index):
            if not 0 <= k < self.counts[i]:
                raise IndexError(f"index {k} out of range for dimension {i} (size {self.counts[i]})")
        return np.array([self.axis(i)[k] for i, k in enumerate(index)])

    def contains(self, states) -> np.ndarray:
        """Whether states (``(ndim, ...)``) lie inside the non-periodic bounds."""
        states = np.asarray(states, dtype=float)
        inside = np.ones(states.shape[1:], dtype=bool)
        for i in range(self.ndim):
            if not self.periodic[i]:
                inside &= (states[i] >= self.lo[i]) & (states[i] <= self.hi[i])
        return inside

    def wrap(self, states) -> np.ndarray:
        """Map periodic coordinates back into ``[lo, hi)``."""
        states = np.array(states, dtype=float)
        for i in range(self.ndim):
            if self.periodic[i]:
                period = self.hi[i] - self.lo[i]
                states[i] = self.lo[i] + np.mod(states[i] - self.lo[i], period)
        return states

    def descriptor(self) -> list:
        """Flat ``[ndim, (count, lo, hi, periodic) * ndim]`` header used by file formats."""
        out: list = [self.ndim]
        for n, a, b, p in zip(self.counts, self.lo, self.hi, self.periodic):
            out += [n, a, b, int(p)]
        return out

    @classmethod
    def from_descriptor(cls, items) -> Grid:
        ndim = int(items[0])
        counts, lo, hi, per = [], [], [], []
        for i in range(ndim):
            n, a, b, p = items[1 + 4 * i: 5 + 4 * i]
            counts.append(int(n))
            lo.append(float(a))
            hi.append(float(b))
            per.append(bool(int(p)))
        return cls(tuple(lo), tuple(hi), tuple(counts), tuple(per))


@dataclass
class ValueField:
    """One time slice of a nodal scalar field."""

    grid: Grid
    values: np.ndarray
    time_label: float = 0.0
    horizon: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.size != self.grid.size:
            raise ValueError(f"field has {values.size} values, grid has {self.grid.size} nodes")
        self.values = values.reshape(self.grid.shape)

    def copy(self) -> ValueField:
        return ValueField(self.grid, self.values.copy(), self.time_label, self.horizon, dict(self.meta))

    def interpolate(self, states) -> np.ndarray:
        return interpolate(self.grid, self.values, states)


GHOSTS = ("linear", "constant")


def upwind_differences(grid: Grid, values: np.ndarray, ghost: str = "linear") -> tuple[np.ndarray, np.ndarray]:
    """One-sided first differences of a nodal field along every dimension.

    Returns ``(d_minus, d_plus)``, each of shape ``(ndim, *shape)``. Periodic
    dimensions wrap. Elsewhere the missing neighbor is a ghost node: with
    ``ghost="linear"`` it is extrapolated as ``2 v[edge] - v[edge - 1]``,
    which makes the two one-sided differences equal at the boundary; with
    ``ghost="constant"`` it copies the edge value, so the outward difference
    is zero.
    """
    if ghost not in GHOSTS:
        raise ValueError(f"unknown ghost rule {ghost!r}; expected one of {GHOSTS}")
    values = np.asarray(values, dtype=np.float64).reshape(grid.shape)
    dx = grid.spacing
    d_minus = np.empty((grid.ndim, *grid.shape))
    d_plus = np.empty((grid.ndim, *grid.shape))
    for i in range(grid.ndim):
        if grid.periodic[i]:
            fwd = (np.roll(values, -1, axis=i) - values) / dx[i]
            d_plus[i] = fwd
            d_minus[i] = np.roll(fwd, 1, axis=i)
            continue
        inner = np.diff(values, axis=i) / dx[i]
        first = [slice(None)] * grid.ndim
        last = [slice(None)] * grid.ndim
        first[i] = slice(0, 1)
        last[i] = slice(-1, None)
        first_diff = inner[tuple(first)]
        last_diff = inner[tuple(last)]
        if ghost == "constant":
            first_diff = np.zeros_like(first_diff)
            last_diff = np.zeros_like(last_diff)
        d_plus[i] = np.concatenate([inner, last_diff], axis=i)
        d_minus[i] = np.concatenate([first_diff, inner], axis=i)
    return d_minus, d_plus


def gradient_upwind(field: ValueField, index) -> tuple[np.ndarray, np.ndarray]:
    """Left and right difference vectors at a single node."""
    index = tuple(int(k) for k in index)
    grid = field.grid
    for i, k in enumerate(index):
        if not 0 <= k < grid.counts[i]:
            raise IndexError(f"index {k} out of range for dimension {i}")
    v = field.values
    dx = grid.spacing
    d_minus = np.empty(grid.ndim)
    d_plus = np.empty(grid.ndim)
    for i in range(grid.ndim):
        n = grid.counts[i]
        k = index[i]

        def at(j, i=i):
            idx = list(index)
            idx[i] = j
            return v[tuple(idx)]

        if grid.periodic[i]:
            left, right = at((k - 1) % n), at((k + 1) % n)
        else:
            left = at(k - 1) if k > 0 else 2 * at(0) - at(1)
            right = at(k + 1) if k < n - 1 else 2 * at(n - 1) - at(n - 2)
        d_minus[i] = (at(k) - left) / dx[i]
        d_plus[i] = (right - at(k)) / dx[i]
    return d_minus, d_plus


def interpolate(grid: Grid, values: np.ndarray, states) -> np.ndarray:
    """Multilinear interpolation of a nodal field at states ``(ndim, ...)``.

    Non-periodic coordinates are clamped to the domain; periodic ones wrap.
    """
    states = np.asarray(states, dtype=np.float64)
    values = np.asarray(values).reshape(grid.shape)
    out_shape = states.shape[1:]
    pts = states.reshape(grid.ndim, -1)
    dx = grid.spacing
    lower = []
    frac = []
    upper = []
    for i in range(grid.ndim):
        n = grid.counts[i]
        u = (pts[i] - grid.lo[i]) / dx[i]
        if grid.periodic[i]:
            u = np.mod(u, n)
            k = np.floor(u).astype(np.intp)
            k = np.minimum(k, n - 1)
            lower.append(k)
            upper.append((k + 1) % n)
        else:
            u = np.clip(u, 0.0, n - 1)
            k = np.minimum(np.floor(u).astype(np.intp), n - 2)
            lower.append(k)
            upper.append(k + 1)
        frac.append(u - k)
    result = np.zeros(pts.shape[1])
    for corner in range(2 ** grid.ndim):
        weight = np.ones(pts.shape[1])
        idx = []
        for i in range(grid.ndim):
            if (corner >> i) & 1:
                weight = weight * frac[i]
                idx.append(upper[i])
            else:
                weight = weight * (1.0 - frac[i])
                idx.append(lower[i])
        result += weight * values[tuple(idx)]
    return result.reshape(out_shape)
