"""Game definitions: dynamics, control boxes, running cost and target set.

Evaluators are vectorized. A state argument has shape ``(n, ...)``, controls
have shapes ``(m_a, ...)`` / ``(m_b, ...)`` and broadcast against the state's
trailing axes. ``dynamics`` returns ``(n, ...)``; ``running_cost`` and
``target`` return the broadcast trailing shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import Grid

AFFINE_QUADRATIC = "affine-quadratic"
GENERIC = "generic"

GAMMA_SAMPLES_PER_CHANNEL = 17
GAMMA_DEFLATION = 0.99


class AssumptionError(ValueError):
    """The running cost is not bounded below by a positive constant."""


@dataclass(frozen=True)
class ControlBox:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi):
            raise ValueError("control bounds must have equal length")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"control box lower bound exceeds upper bound: {lo} > {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def center(self) -> np.ndarray:
        return (np.array(self.lo) + np.array(self.hi)) / 2

    @property
    def halfwidth(self) -> np.ndarray:
        return (np.array(self.hi) - np.array(self.lo)) / 2

    def contains(self, u, tol: float = 0.0) -> bool:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return bool(np.all(u >= np.array(self.lo) - tol) and np.all(u <= np.array(self.hi) + tol))

    def lattice(self, per_channel: int) -> np.ndarray:
        """Tensor lattice of controls, shape ``(dim, per_channel**dim)``, lexicographic ascending."""
        axes = [np.linspace(a, b, per_channel) if b > a else np.array([a]) for a, b in zip(self.lo, self.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh])


@dataclass(frozen=True)
class Scenario:
    """A two-player reach game with running cost.

    Player I (``a``) steers toward the target ``{l <= 0}`` and pays the
    running cost; Player II (``b``) opposes.
    """

    name: str
    dynamics: Callable
    running_cost: Callable
    target: Callable
    control_a: ControlBox
    control_b: ControlBox
    structure: str = GENERIC
    params: dict = field(default_factory=dict)

    def inside_target(self, s) -> np.ndarray:
        return np.asarray(self.target(np.asarray(s, dtype=float))) <= 0


def _controls(u, dim):
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = u.reshape(1)
    if u.shape[0] != dim:
        raise ValueError(f"expected {dim} control channels, got {u.shape[0]}")
    return u


def _pad(u, s):
    """Reshape per-channel control values so they broadcast with a state ``(n, ...)``."""
    extra = np.ndim(s) - 1 - (np.ndim(u) - 1)
    if extra > 0 and np.ndim(u) == 1:
        return u.reshape(u.shape + (1,) * extra)
    return u


def masked_dynamics(scn: Scenario, s, a, b) -> np.ndarray:
    """Dynamics frozen to zero on the target set."""
    s = np.asarray(s, dtype=float)
    a = _pad(_controls(a, scn.control_a.dim), s)
    b = _pad(_controls(b, scn.control_b.dim), s)
    f = np.asarray(scn.dynamics(s, a, b), dtype=float)
    f = np.broadcast_to(f, np.broadcast_shapes(f.shape, s.shape))
    return np.where(scn.inside_target(s), 0.0, f)


def masked_cost(scn: Scenario, s, a, b) -> np.ndarray:
    """Running cost, zero on the target set."""
    s = np.asarray(s, dtype=float)
    a = _pad(_controls(a, scn.control_a.dim), s)
    b = _pad(_controls(b, scn.control_b.dim), s)
    c = np.asarray(scn.running_cost(s, a, b), dtype=float)
    out = np.where(scn.inside_target(s), 0.0, c)
    return out if out.ndim else float(out)


def _quadratic_min_on_interval(lin, quad, lo, hi):
    """Minimum of ``lin*u + quad*u**2`` over ``[lo, hi]`` (elementwise)."""
    candidates = [lin * lo + quad * lo**2, lin * hi + quad * hi**2]
    with np.errstate(divide="ignore", invalid="ignore"):
        vertex = np.clip(np.where(quad > 0, -lin / (2 * np.where(quad > 0, quad, 1.0)), lo), lo, hi)
    candidates.append(lin * vertex + quad * vertex**2)
    return np.minimum.reduce(candidates)


def compute_gamma(scn: Scenario, domain: Grid) -> float:
    """Positive lower bound of the running cost over grid nodes times both control boxes.

    Affine-quadratic scenarios are minimized channel by channel in closed form
    at every node. Generic scenarios are sampled on a 17-point-per-channel
    control lattice and the sampled minimum is deflated by 1%.
    """
    states = domain.states()
    if scn.structure == AFFINE_QUADRATIC:
        from .hamiltonian import extract_affine_quadratic

        terms = extract_affine_quadratic(scn, states, masked=False)
        total = terms.cost0.copy()
        for box, lin, quad in ((scn.control_a, terms.cost_a1, terms.cost_a2),
                               (scn.control_b, terms.cost_b1, terms.cost_b2)):
            for k in range(box.dim):
                total = total + _quadratic_min_on_interval(lin[k], quad[k], box.lo[k], box.hi[k])
        gamma = float(total.min())
    else:
        la = scn.control_a.lattice(GAMMA_SAMPLES_PER_CHANNEL)
        lb = scn.control_b.lattice(GAMMA_SAMPLES_PER_CHANNEL)
        best = np.inf
        for i in range(la.shape[1]):
            for j in range(lb.shape[1]):
                c = scn.running_cost(states, _pad(la[:, i], states), _pad(lb[:, j], states))
                best = min(best, float(np.min(c)))
        gamma = GAMMA_DEFLATION * best
    if not gamma > 0:
        raise AssumptionError(f"running cost minimum {gamma} is not positive")
    return gamma


def check_bounded_dynamics(scn: Scenario, domain: Grid, samples: int = 10_000, seed: int = 0) -> float:
    """Sampled bound on ``max |f|`` over the domain and control boxes."""
    rng = np.random.default_rng(seed)
    lo, hi = np.array(domain.lo), np.array(domain.hi)
    s = lo[:, None] + rng.random((domain.ndim, samples)) * (hi - lo)[:, None]
    ca, cb = scn.control_a, scn.control_b
    a = np.array(ca.lo)[:, None] + rng.random((ca.dim, samples)) * (np.array(ca.hi) - np.array(ca.lo))[:, None]
    b = np.array(cb.lo)[:, None] + rng.random((cb.dim, samples)) * (np.array(cb.hi) - np.array(cb.lo))[:, None]
    f = np.asarray(scn.dynamics(s, a, b))
    bound = float(np.max(np.abs(f)))
    if not np.isfinite(bound):
        raise ValueError(f"dynamics of {scn.name!r} are unbounded on the domain")
    return bound


# -- built-in games ---------------------------------------------------------

def _stack(*components):
    return np.stack(np.broadcast_arrays(*components))


def builtin_linear2d() -> Scenario:
    """``x' = b, y' = -x + a`` with target band ``|y| <= 0.5`` and unit cost."""

    def dynamics(s, a, b):
        return _stack(b[0] + 0.0 * s[0], -s[0] + a[0])

    def running_cost(s, a, b):
        return np.ones(np.broadcast_shapes(np.shape(s[0]), np.shape(a[0]), np.shape(b[0])))

    def target(s):
        return np.abs(s[1]) - 0.5

    box = ControlBox((-1.0,), (1.0,))
    return Scenario("linear2d", dynamics, running_cost, target, box, box, AFFINE_QUADRATIC,
                    {"state_dim": 2})


def builtin_pursuit(lam: float = 0.0, v: float = 5.0, r: float = 5.0) -> Scenario:
    """Planar pursuit-evasion in the pursuer's frame, state ``(x, y, theta)``.

    Both vehicles fly at speed ``v``; capture is ``x**2 + y**2 <= r**2``. The
    running cost is ``1 + lam * (x**2 + y**2 + a**2 + b**2)``.
    """
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")

    def dynamics(s, a, b):
        x, y, th = s[0], s[1], s[2]
        return _stack(-v + v * np.cos(th) + a[0] * y, v * np.sin(th) - a[0] * x, b[0] - a[0] + 0.0 * th)

    def running_cost(s, a, b):
        return 1.0 + lam * (s[0] ** 2 + s[1] ** 2 + a[0] ** 2 + b[0] ** 2)

    def target(s):
        return s[0] ** 2 + s[1] ** 2 - r**2

    box = ControlBox((-1.0,), (1.0,))
    return Scenario("pursuit", dynamics, running_cost, target, box, box, AFFINE_QUADRATIC,
                    {"state_dim": 3, "lambda": lam, "v": v, "r": r})


def analytic_rt_linear2d(s) -> np.ndarray | bool:
    """Closed-form reachable tube of ``builtin_linear2d`` for horizon 1."""
    s = np.asarray(s, dtype=float)
    x, y = s[0], s[1]
    member = (
        (np.abs(y) <= 0.5)
        | ((0 <= y) & (y <= x + 1))
        | ((0 >= y) & (y >= x - 1))
        | ((0 <= y) & (y <= 0.5 * x**2 + x + 1) & (-1 <= x) & (x <= 0))
        | ((0 >= y) & (y >= -0.5 * x**2 + x - 1) & (0 <= x) & (x <= 1))
    )
    return bool(member) if member.ndim == 0 else member


BUILTINS = {
    "linear2d": builtin_linear2d,
    "pursuit": builtin_pursuit,
}
