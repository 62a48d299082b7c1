"""Backward-in-time marching of the reach-cost HJ equation and the classical level-set baseline."""

from __future__ import annotations

import functools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, ValueField, interpolate, upwind_differences
from .hamiltonian import DEFAULT_LATTICE, hamiltonian_model, lax_friedrichs
from .scenario import Scenario, _pad, compute_gamma, masked_cost, masked_dynamics
from .sets import LevelMask, sublevel

IMPROVED = "improved"
CLASSICAL = "classical"
# "upwind": min-max over per-control upwinded forms (least smearing).
# "lax-friedrichs": H at the central gradient plus alpha-weighted jumps, alpha = max |f^| per node.
UPWIND = "upwind"
LAX_FRIEDRICHS = "lax-friedrichs"
SCHEMES = (UPWIND, LAX_FRIEDRICHS)


class SolverError(RuntimeError):
    pass


class DegenerateScenarioError(SolverError):
    """Every dissipation bound is zero, so no CFL step exists."""


class InstabilityError(SolverError):
    def __init__(self, step: int, time_label: float, index: tuple):
        super().__init__(f"non-finite value at step {step} (t={time_label:.6g}), node {index}")
        self.step = step
        self.time_label = time_label
        self.index = index


@dataclass
class SolveConfig:
    horizon: float
    cfl: float = 0.5
    snapshot_times: tuple[float, ...] = ()
    mode: str = IMPROVED
    threads: int = 1
    lattice: int | None = None
    scheme: str = UPWIND
    subcell_target: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.horizon >= 0:
            raise ValueError(f"horizon must be nonnegative, got {self.horizon}")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.mode not in (IMPROVED, CLASSICAL):
            raise ValueError(f"unknown mode {self.mode!r}")
        for t in self.snapshot_times:
            if not 0 <= t <= self.horizon:
                raise ValueError(f"snapshot time {t} outside [0, {self.horizon}]")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class SolveResult:
    final_slice: ValueField
    snapshots: dict[float, ValueField] = field(default_factory=dict)
    steps_taken: int = 0
    wall_time: float = 0.0
    dt_nominal: float = 0.0


class _SlabHamiltonian:
    """Hamiltonian models built per slab along axis 0 so steps can be threaded.

    Each node's arithmetic is identical whatever the slab split, so results
    are bit-identical for any thread count.
    """

    def __init__(self, scn, grid, masked, with_cost, threads, lattice, scheme=UPWIND):
        states = grid.states()
        n0 = grid.counts[0]
        nslab = min(threads, n0)
        edges = np.linspace(0, n0, nslab + 1).astype(int)
        self.slabs = [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]
        self.models = [hamiltonian_model(scn, states[:, sl], masked, with_cost, lattice) for sl in self.slabs]
        self.alpha = np.concatenate([m.dissipation() for m in self.models], axis=1)
        self.upwind = scheme == UPWIND
        self.pool = ThreadPoolExecutor(threads) if threads > 1 else None

    def __call__(self, d_minus, d_plus):
        def work(k):
            sl = self.slabs[k]
            pm, pp = d_minus[:, sl], d_plus[:, sl]
            if self.upwind:
                return self.models[k].upwind(pm, pp)
            return lax_friedrichs(self.models[k], pm, pp, self.alpha[:, sl], dissipation_sign=1.0)

        if self.pool is None:
            parts = [work(k) for k in range(len(self.slabs))]
        else:
            parts = list(self.pool.map(work, range(len(self.slabs))))
        return np.concatenate(parts, axis=0)

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


def stable_timestep(alpha: np.ndarray, grid: Grid, cfl: float) -> float:
    """``cfl / sum_i (max alpha_i / dx_i)``."""
    alpha_max = alpha.reshape(grid.ndim, -1).max(axis=1)
    denom = float(np.sum(alpha_max / grid.spacing))
    if denom == 0:
        raise DegenerateScenarioError("all dissipation bounds vanish; dynamics are frozen everywhere")
    return cfl / denom


def target_arm_fractions(grid: Grid, level: np.ndarray, alpha: np.ndarray, dt: float):
    """Shortened stencil arms for exterior nodes whose neighbor lies in the target.

    Along each dimension, an exterior node (``l > 0``) next to a target node
    (``l <= 0``) gets the fraction ``theta = l_out / (l_out - l_in)`` of a cell
    to the linearly interpolated interface. ``theta`` is floored at
    ``dt * sum_i alpha_i / dx_i`` so the explicit update stays monotone.
    Returns ``(theta_minus, theta_plus)`` of shape ``(ndim, *shape)``, 1 elsewhere.
    """
    level = np.asarray(level, dtype=float)
    outside = level > 0
    floor = dt * np.einsum("i...,i->...", alpha, 1.0 / grid.spacing)
    theta_minus = np.ones((grid.ndim, *grid.shape))
    theta_plus = np.ones((grid.ndim, *grid.shape))
    for i in range(grid.ndim):
        for shift, theta in ((1, theta_minus), (-1, theta_plus)):
            # shift=1 brings the lower neighbor to each node
            neighbor = np.roll(level, shift, axis=i)
            valid = np.ones(grid.shape, dtype=bool)
            if not grid.periodic[i]:
                edge = [slice(None)] * grid.ndim
                edge[i] = 0 if shift == 1 else -1
                valid[tuple(edge)] = False
            hit = outside & valid & (neighbor <= 0)
            with np.errstate(divide="ignore", invalid="ignore"):
                frac = level / (level - neighbor)
            theta[i] = np.where(hit, np.clip(frac, np.minimum(floor, 1.0), 1.0), 1.0)
    return theta_minus, theta_plus


def _spatial_operator(grid, hamiltonian, freeze, arms):
    """``values -> dW/d(-t)``: the numerical Hamiltonian on one-sided differences."""

    def operator(values):
        d_minus, d_plus = upwind_differences(grid, values, ghost="constant")
        if arms is not None:
            # target neighbors hold exactly 0, so rescaling the arm is exact
            d_minus = np.where(arms[0] < 1.0, d_minus / arms[0], d_minus)
            d_plus = np.where(arms[1] < 1.0, d_plus / arms[1], d_plus)
        h = hamiltonian(d_minus, d_plus)
        return np.minimum(h, 0.0) if freeze else h

    return operator


def _march(grid, initial, hamiltonian, cfg, freeze, arms=None):
    horizon = float(cfg.horizon)
    dt_nominal = stable_timestep(hamiltonian.alpha, grid, cfg.cfl)
    if arms is not None:
        arms = arms(dt_nominal)
    operator = _spatial_operator(grid, hamiltonian, freeze, arms)
    stops = sorted({float(t) for t in cfg.snapshot_times} | {0.0}, reverse=True)
    values = initial
    snapshots = {}
    t = horizon
    steps = 0
    if horizon in stops:
        snapshots[horizon] = values.copy()
    for stop in stops:
        while t > stop:
            dt = dt_nominal
            t_next = t - dt
            if t_next <= stop or (t_next - stop) < 1e-12 * max(horizon, 1.0):
                dt = t - stop
                t_next = stop
            values = values + dt * operator(values)
            t = t_next
            steps += 1
            bad = ~np.isfinite(values)
            if bad.any():
                raise InstabilityError(steps, t, tuple(int(k) for k in np.argwhere(bad)[0]))
        snapshots[stop] = values.copy()
    return values, snapshots, steps, dt_nominal


def _solve(scn, grid, cfg, mode):
    if cfg.mode != mode:
        raise ValueError(f"config mode is {cfg.mode!r}, expected {mode!r}")
    start = time.perf_counter()
    improved = mode == IMPROVED
    ham = _SlabHamiltonian(scn, grid, masked=improved, with_cost=improved, threads=cfg.threads,
                           lattice=cfg.lattice, scheme=cfg.scheme)
    try:
        level = np.asarray(scn.target(grid.states()), dtype=float)
        arms = None
        if improved:
            initial = np.zeros(grid.shape)
            if cfg.subcell_target:
                arms = functools.partial(target_arm_fractions, grid, level, ham.alpha)
        else:
            initial = level
        if cfg.horizon == 0:
            values, snaps, steps, dt_nominal = initial, {0.0: initial.copy()}, 0, 0.0
        else:
            values, snaps, steps, dt_nominal = _march(grid, initial, ham, cfg, freeze=not improved, arms=arms)
    finally:
        ham.close()
    meta = {"mode": mode, "scenario": scn.name, "dt_mean": cfg.horizon / steps if steps else 0.0}
    final = ValueField(grid, values, 0.0, cfg.horizon, dict(meta))
    snapshots = {t: ValueField(grid, v, t, cfg.horizon, dict(meta))
                 for t, v in snaps.items() if t in cfg.snapshot_times}
    return SolveResult(final, snapshots, steps, time.perf_counter() - start, dt_nominal)


def solve_improved(scn: Scenario, grid: Grid, cfg: SolveConfig) -> SolveResult:
    """Solve ``W_t + min_a max_b {c^ + W_s . f^} = 0`` backward from ``W(., T) = 0``.

    Target nodes carry zero cost and zero dynamics, so they stay exactly 0.
    """
    return _solve(scn, grid, cfg, IMPROVED)


def solve_classical(scn: Scenario, grid: Grid, cfg: SolveConfig) -> SolveResult:
    """Level-set baseline ``V_t + min(0, min_a max_b V_s . f) = 0`` with ``V(., T) = l``."""
    return _solve(scn, grid, cfg, CLASSICAL)


def default_epsilon(j_max: float, gamma: float) -> float:
    return 0.1 * j_max / gamma


def run_algorithm1(scn: Scenario, grid: Grid, costs, epsilon: float | None = None,
                   cfl: float = 0.5, threads: int = 1, gamma: float | None = None,
                   lattice: int | None = None, scheme: str = UPWIND):
    """Compute every cost-limited tube ``{W(., 0) <= J_m}`` from one solve.

    Returns ``(result, masks)`` with masks in the order of ``costs``.
    """
    costs = [float(j) for j in costs]
    if not costs:
        raise ValueError("at least one admissible cost is required")
    if any(not j > 0 for j in costs):
        raise ValueError(f"admissible costs must be positive, got {costs}")
    if gamma is None:
        gamma = compute_gamma(scn, grid)
    j_max = max(costs)
    if epsilon is None:
        epsilon = default_epsilon(j_max, gamma)
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    horizon = j_max / gamma + epsilon
    result = solve_improved(scn, grid, SolveConfig(horizon, cfl=cfl, threads=threads, lattice=lattice,
                                                   scheme=scheme))
    result.final_slice.meta["gamma"] = gamma
    masks = [sublevel(result.final_slice, j, source=IMPROVED) for j in costs]
    return result, masks


@dataclass
class DppResidual:
    residual: np.ndarray
    interior: np.ndarray
    max: float
    mean: float


def dpp_residual(scn: Scenario, result: SolveResult | None, slice_t: ValueField,
                 slice_t_plus: ValueField, dt: float, lattice: int = DEFAULT_LATTICE,
                 margin: int = 3) -> DppResidual:
    """Per-node mismatch of one dynamic-programming step between two slices.

    ``|W(s, t) - min_a max_b [c^ dt + W(s + f^ dt, t + dt)]|`` with the
    advected value read by multilinear interpolation; summarized over nodes
    at least ``margin`` cells from non-periodic boundaries.
    """
    grid = slice_t.grid
    if slice_t_plus.grid != grid:
        raise ValueError("slices live on different grids")
    gap = slice_t_plus.time_label - slice_t.time_label
    if abs(gap - dt) > 1e-9 * max(1.0, abs(dt)):
        raise ValueError(f"slices are {gap} apart, expected dt={dt}")
    if result is not None and result.final_slice.grid != grid:
        raise ValueError("result and slices live on different grids")
    states = grid.states()
    la = scn.control_a.lattice(lattice)
    lb = scn.control_b.lattice(lattice)
    best = None
    for i in range(la.shape[1]):
        a = _pad(la[:, i], states)
        inner = None
        for j in range(lb.shape[1]):
            b = _pad(lb[:, j], states)
            moved = states + masked_dynamics(scn, states, a, b) * dt
            q = masked_cost(scn, states, a, b) * dt + interpolate(grid, slice_t_plus.values, moved)
            inner = q if inner is None else np.maximum(inner, q)
        best = inner if best is None else np.minimum(best, inner)
    residual = np.abs(slice_t.values - best)
    interior = np.ones(grid.shape, dtype=bool)
    for i in range(grid.ndim):
        if grid.periodic[i]:
            continue
        sl = [slice(None)] * grid.ndim
        sl[i] = slice(0, margin)
        interior[tuple(sl)] = False
        sl[i] = slice(grid.counts[i] - margin, None)
        interior[tuple(sl)] = False
    vals = residual[interior]
    return DppResidual(residual, interior, float(vals.max()), float(vals.mean()))


__all__ = [
    "CLASSICAL", "IMPROVED", "DegenerateScenarioError", "DppResidual", "InstabilityError",
    "LevelMask", "SolveConfig", "SolveResult", "SolverError", "default_epsilon", "dpp_residual",
    "run_algorithm1", "solve_classical", "solve_improved", "stable_timestep",
]
