"""Closed-loop rollouts that check tube membership against the original game.

Player I follows the saddle argument of the Hamiltonian at a costate read off
the value field; Player II is either that saddle argument ("optimal"), a
uniform random control, or a constant. Trajectories use the unmasked
dynamics and cost, so a rollout tests the original reach-before-cost
question rather than the masked problem the solver works with.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import ValueField
from .hamiltonian import hamiltonian_model
from .scenario import Scenario, _pad
from .sets import erode, sublevel
from .solver import stable_timestep

OPTIMAL = "optimal"
RANDOM = "random"
CONSTANT = "constant"


class DomainError(ValueError):
    """A state lies outside the computational domain."""


@dataclass
class RolloutRecord:
    initial_state: np.ndarray
    times: np.ndarray
    states: np.ndarray              # (steps + 1, n)
    accumulated_cost: np.ndarray    # running integral of c at each time stamp
    captured: bool
    capture_time: float | None = None
    outcome: str = ""               # "captured", "horizon" or "domain"

    @property
    def final_cost(self) -> float:
        return float(self.accumulated_cost[-1])


@dataclass
class VerificationReport:
    level: float
    n_samples: int
    successes: int
    success_fraction: float
    worst_overshoot: float
    tol: float
    seed: int
    records: list = field(default_factory=list, repr=False)

    def summary(self) -> str:
        return (f"level={self.level:g} samples={self.n_samples} successes={self.successes} "
                f"fraction={self.success_fraction:.4f} worst_overshoot={self.worst_overshoot:.4f} "
                f"tol={self.tol:g} seed={self.seed}")


def _costates(field: ValueField, states: np.ndarray) -> np.ndarray:
    grid = field.grid
    p = np.empty_like(states)
    for i, h in enumerate(grid.spacing):
        up = states.copy()
        down = states.copy()
        up[i] += h
        down[i] -= h
        p[i] = (field.interpolate(up) - field.interpolate(down)) / (2 * h)
    return p


def _saddle_controls(field: ValueField, scn: Scenario, states: np.ndarray):
    """Saddle controls for a batch of states ``(n, m)``; box midpoints inside the target."""
    model = hamiltonian_model(scn, states)
    _, a, b = model.evaluate(_costates(field, states))
    inside = scn.inside_target(states)
    a = np.where(inside, scn.control_a.center[:, None], a)
    b = np.where(inside, scn.control_b.center[:, None], b)
    return a, b


def synthesize_controls(field: ValueField, scn: Scenario, s) -> tuple[np.ndarray, np.ndarray]:
    """Player I's and Player II's saddle controls at state ``s``.

    The costate is a central difference of the multilinearly interpolated
    field with one grid spacing per side.
    """
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.size != field.grid.ndim:
        raise ValueError(f"state has {s.size} components, grid has {field.grid.ndim}")
    if not field.grid.contains(s[:, None])[0]:
        raise DomainError(f"state {s} lies outside the computational domain")
    a, b = _saddle_controls(field, scn, s[:, None])
    return a[:, 0], b[:, 0]


def default_rollout_dt(field: ValueField, scn: Scenario) -> float:
    """Half of the solver's average step, or half a CFL-0.5 step if unknown."""
    mean = field.meta.get("dt_mean")
    if mean:
        return 0.5 * float(mean)
    model = hamiltonian_model(scn, field.grid.states(), masked=False)
    return 0.5 * stable_timestep(model.dissipation(), field.grid, 0.5)


def _adversary_controls(adversary, scn, b_opt, rngs):
    if adversary == OPTIMAL:
        return b_opt
    if adversary == RANDOM:
        lo, hi = np.array(scn.control_b.lo), np.array(scn.control_b.hi)
        draws = np.stack([rng.uniform(lo, hi) for rng in rngs], axis=1)
        return draws
    if isinstance(adversary, tuple) and len(adversary) == 2 and adversary[0] == CONSTANT:
        b = np.asarray(adversary[1], dtype=float).reshape(-1, 1)
        if b.shape[0] != scn.control_b.dim or not scn.control_b.contains(b[:, 0]):
            raise ValueError(f"constant adversary control {adversary[1]} is not in Player II's box")
        return np.broadcast_to(b, b_opt.shape)
    raise ValueError(f"unknown adversary {adversary!r}; use 'optimal', 'random' or ('constant', b)")


def simulate_batch(field: ValueField, scn: Scenario, starts, dt: float | None = None,
                   t_max: float | None = None, adversary=OPTIMAL, rngs=None) -> list[RolloutRecord]:
    """Simulate several rollouts at once; each is independent of the others."""
    grid = field.grid
    starts = np.asarray(starts, dtype=float)
    if starts.ndim == 1:
        starts = starts[:, None]
    m = starts.shape[1]
    dt = default_rollout_dt(field, scn) if dt is None else float(dt)
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    t_max = field.horizon if t_max is None else float(t_max)
    if adversary == RANDOM and rngs is None:
        rngs = [np.random.default_rng(k) for k in range(m)]
    states = grid.wrap(starts)
    cost = np.zeros(m)
    t = 0.0
    active = np.ones(m, dtype=bool)
    outcome = [""] * m
    capture_time: list[float | None] = [None] * m
    hist_states = [states.copy()]
    hist_cost = [cost.copy()]
    hist_t = [t]
    last = np.zeros(m, dtype=int)
    steps = 0
    while active.any():
        captured = active & scn.inside_target(states)
        outside = active & ~captured & ~grid.contains(states)
        for k in np.flatnonzero(captured):
            outcome[k], capture_time[k] = "captured", t
        for k in np.flatnonzero(outside):
            outcome[k] = "domain"
        active &= ~(captured | outside)
        if active.any() and t >= t_max - 1e-12 * max(1.0, t_max):
            for k in np.flatnonzero(active):
                outcome[k] = "horizon"
            active[:] = False
        if not active.any():
            break
        idx = np.flatnonzero(active)
        s = states[:, idx]
        a, b_opt = _saddle_controls(field, scn, s)
        b = _adversary_controls(adversary, scn, b_opt, None if rngs is None else [rngs[k] for k in idx])
        a_in, b_in = _pad(a, s), _pad(b, s)
        f = np.broadcast_to(np.asarray(scn.dynamics(s, a_in, b_in), dtype=float), s.shape)
        c = np.broadcast_to(np.asarray(scn.running_cost(s, a_in, b_in), dtype=float), idx.shape)
        step = min(dt, t_max - t)
        cost[idx] += c * step
        states[:, idx] = grid.wrap(s + f * step)
        t += step
        steps += 1
        last[idx] = steps
        hist_states.append(states.copy())
        hist_cost.append(cost.copy())
        hist_t.append(t)
    times = np.array(hist_t)
    traj = np.stack(hist_states)      # (steps + 1, n, m)
    costs = np.stack(hist_cost)       # (steps + 1, m)
    records = []
    for k in range(m):
        end = last[k] + 1
        records.append(RolloutRecord(starts[:, k].copy(), times[:end].copy(), traj[:end, :, k].copy(),
                                     costs[:end, k].copy(), outcome[k] == "captured", capture_time[k],
                                     outcome[k]))
    return records


def simulate(field: ValueField, scn: Scenario, s0, dt: float | None = None, t_max: float | None = None,
             adversary=OPTIMAL, rng=None) -> RolloutRecord:
    """Forward-Euler rollout from ``s0`` until capture, ``t_max`` or leaving the domain.

    ``adversary`` is ``"optimal"``, ``"random"`` or ``("constant", b)``.
    """
    s0 = np.asarray(s0, dtype=float).reshape(-1)
    if not field.grid.contains(s0[:, None])[0]:
        raise DomainError(f"initial state {s0} lies outside the computational domain")
    rngs = None if rng is None else [rng]
    return simulate_batch(field, scn, s0[:, None], dt, t_max, adversary, rngs)[0]


def verify_crt(field: ValueField, scn: Scenario, level: float, n_samples: int, seed: int,
               tol: float = 0.1, dt: float | None = None, t_max: float | None = None,
               adversary=OPTIMAL, exclude_target: bool = False) -> VerificationReport:
    """Monte-Carlo check that states in ``{W <= level}`` reach the target within cost.

    Start nodes are drawn uniformly (with replacement) from the mask eroded
    by two cells, where the domain edge counts as outside. With
    ``exclude_target`` the target nodes are dropped too, since a start there
    is captured trivially at zero cost. Sample ``k`` uses
    its own generator spawned from ``seed``, so results do not depend on
    evaluation order. A sample succeeds when it is captured with
    accumulated cost at most ``level * (1 + tol)``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    grid = field.grid
    mask = sublevel(field, level)
    pool = erode(grid, mask.member, 2)
    if exclude_target:
        pool &= np.asarray(scn.target(grid.states()), dtype=float) > 0
    eligible = np.argwhere(pool)
    if len(eligible) == 0:
        return VerificationReport(float(level), 0, 0, float("nan"), float("nan"), tol, seed)
    children = np.random.SeedSequence(seed).spawn(n_samples)
    rngs = [np.random.default_rng(child) for child in children]
    picks = np.array([eligible[rng.integers(len(eligible))] for rng in rngs])
    axes = [grid.axis(i) for i in range(grid.ndim)]
    starts = np.stack([axes[i][picks[:, i]] for i in range(grid.ndim)])
    records = simulate_batch(field, scn, starts, dt, t_max, adversary, rngs)
    budget = level * (1 + tol)
    successes = sum(1 for r in records if r.captured and r.final_cost <= budget)
    captured_costs = np.array([r.final_cost for r in records if r.captured])
    if captured_costs.size == 0:
        worst = float("nan")
    elif level > 0:
        worst = float(np.max(captured_costs / level - 1.0))
    else:
        worst = 0.0 if np.all(captured_costs == 0) else float("inf")
    return VerificationReport(float(level), n_samples, successes, successes / n_samples, worst, tol, seed,
                              records)
