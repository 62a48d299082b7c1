"""The min-max Hamiltonian ``min_a max_b { c^ + p . f^ }`` and its Lax-Friedrichs form.

Two evaluators share one interface (``evaluate(p)``, ``dissipation()``):

* :class:`AffineQuadraticHamiltonian` for games whose dynamics are affine in
  each control channel and whose cost is a separable quadratic in the
  controls. The per-channel coefficients are recovered once by probing the
  scenario at ``u = 0, +e_k, -e_k`` and cached, so a solver step is a handful
  of array operations.
* :class:`LatticeHamiltonian`, an exhaustive search over a control lattice.

Both also provide ``upwind(p_minus, p_plus)``, the monotone numerical
Hamiltonian used by the solver: every control pair ``(a, b)`` contributes
the upwinded linear form ``c + sum_i max(f_i, 0) p+_i + min(f_i, 0) p-_i``
and the result is ``min_a max_b`` over a candidate set that does not depend
on the costates. Minima and maxima of monotone forms are monotone, and when
``p- = p+ = p`` the form collapses to ``c + p . f``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .scenario import AFFINE_QUADRATIC, Scenario, _pad

DEFAULT_LATTICE = 9
# interior candidates only refine crossings and quadratic vertices in the
# affine upwind min-max; endpoints and sign changes are always included
AFFINE_CANDIDATES = 5


@dataclass
class AffineQuadraticTerms:
    """Per-node coefficients of ``f = drift + gain_a a + gain_b b`` and
    ``c = cost0 + sum_k (cost_a1 a_k + cost_a2 a_k^2) + (same for b)``."""

    drift: np.ndarray    # (n, ...)
    gain_a: np.ndarray   # (n, m_a, ...)
    gain_b: np.ndarray   # (n, m_b, ...)
    cost0: np.ndarray    # (...)
    cost_a1: np.ndarray  # (m_a, ...)
    cost_a2: np.ndarray
    cost_b1: np.ndarray  # (m_b, ...)
    cost_b2: np.ndarray


@dataclass
class HamiltonianSample:
    value: float
    argmin_a: np.ndarray
    argmax_b: np.ndarray
    alpha: np.ndarray


def extract_affine_quadratic(scn: Scenario, states, masked: bool = True,
                             with_cost: bool = True) -> AffineQuadraticTerms:
    states = np.asarray(states, dtype=float)
    n = states.shape[0]
    trailing = states.shape[1:]
    ma, mb = scn.control_a.dim, scn.control_b.dim
    za, zb = np.zeros(ma), np.zeros(mb)

    def probe(a, b):
        f = np.broadcast_to(np.asarray(scn.dynamics(states, _pad(a, states), _pad(b, states)), dtype=float),
                            (n, *trailing))
        c = np.broadcast_to(np.asarray(scn.running_cost(states, _pad(a, states), _pad(b, states)), dtype=float),
                            trailing)
        return f, c

    f0, c0 = probe(za, zb)
    gain_a = np.empty((n, ma, *trailing))
    gain_b = np.empty((n, mb, *trailing))
    ca1, ca2 = np.empty((ma, *trailing)), np.empty((ma, *trailing))
    cb1, cb2 = np.empty((mb, *trailing)), np.empty((mb, *trailing))
    for player, dim, gain, lin, quad in (("a", ma, gain_a, ca1, ca2), ("b", mb, gain_b, cb1, cb2)):
        for k in range(dim):
            e = np.zeros(dim)
            e[k] = 1.0
            if player == "a":
                fp, cp = probe(e, zb)
                fm, cm = probe(-e, zb)
            else:
                fp, cp = probe(za, e)
                fm, cm = probe(za, -e)
            gain[:, k] = (fp - fm) / 2
            lin[k] = (cp - cm) / 2
            quad[k] = (cp + cm) / 2 - c0
    terms = AffineQuadraticTerms(np.array(f0), gain_a, gain_b, np.array(c0), ca1, ca2, cb1, cb2)
    if not with_cost:
        for name in ("cost0", "cost_a1", "cost_a2", "cost_b1", "cost_b2"):
            setattr(terms, name, np.zeros_like(getattr(terms, name)))
    if masked:
        inside = scn.inside_target(states)
        for name, arr in vars(terms).items():
            setattr(terms, name, np.where(inside, 0.0, arr))
    return terms


def _best_quadratic(lin, quad, lo, hi, maximize):
    """Optimize ``lin*u + quad*u**2`` over ``[lo, hi]``; ties go to the smaller ``u``."""
    sign = -1.0 if maximize else 1.0
    # minimize sign * objective; candidates visited in increasing u
    l, q = sign * lin, sign * quad
    best_u = np.full(np.shape(lin), lo, dtype=float)
    best_v = l * lo + q * lo**2
    convex = q > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        vertex = np.clip(-l / (2 * np.where(convex, q, 1.0)), lo, hi)
    v_vertex = l * vertex + q * vertex**2
    take = convex & (v_vertex < best_v)
    best_u = np.where(take, vertex, best_u)
    best_v = np.where(take, v_vertex, best_v)
    v_hi = l * hi + q * hi**2
    take = v_hi < best_v
    best_u = np.where(take, hi, best_u)
    best_v = np.where(take, v_hi, best_v)
    return best_u, sign * best_v


class AffineQuadraticHamiltonian:
    def __init__(self, scn: Scenario, states, masked: bool = True, with_cost: bool = True,
                 per_channel: int = AFFINE_CANDIDATES):
        self.scn = scn
        self.per_channel = per_channel
        self.terms = extract_affine_quadratic(scn, states, masked=masked, with_cost=with_cost)
        self._flat = None

    def dissipation(self) -> np.ndarray:
        """Bounds ``alpha_i = max |f^_i|`` over the control boxes, per node."""
        t = self.terms
        center = t.drift.copy()
        spread = np.zeros_like(t.drift)
        for gain, box in ((t.gain_a, self.scn.control_a), (t.gain_b, self.scn.control_b)):
            for k in range(box.dim):
                center += gain[:, k] * box.center[k]
                spread += np.abs(gain[:, k]) * box.halfwidth[k]
        return np.abs(center) + spread

    def evaluate(self, p):
        """Return ``(value, a*, b*)`` for costates ``p`` of shape ``(n, ...)``."""
        t = self.terms
        p = np.asarray(p, dtype=float)
        value = t.cost0 + np.einsum("i...,i...->...", p, t.drift)
        a_star = []
        b_star = []
        for k in range(self.scn.control_a.dim):
            lin = t.cost_a1[k] + np.einsum("i...,i...->...", p, t.gain_a[:, k])
            u, v = _best_quadratic(lin, t.cost_a2[k], self.scn.control_a.lo[k], self.scn.control_a.hi[k], False)
            a_star.append(u)
            value = value + v
        for k in range(self.scn.control_b.dim):
            lin = t.cost_b1[k] + np.einsum("i...,i...->...", p, t.gain_b[:, k])
            u, v = _best_quadratic(lin, t.cost_b2[k], self.scn.control_b.lo[k], self.scn.control_b.hi[k], True)
            b_star.append(u)
            value = value + v
        return value, np.array(a_star), np.array(b_star)

    def _upwind_arrays(self):
        """Node-major coefficients plus the static control candidates of every node.

        Player I's candidates are a lattice of its box plus, for a scalar
        control, every ``a`` at which some velocity component changes sign
        (with ``b`` at an endpoint when that component also depends on ``b``).
        Player II's candidates are built per ``a`` inside the kernel.
        """
        if self._flat is not None:
            return self._flat
        t = self.terms
        n = t.drift.shape[0]
        size = t.cost0.size
        ca, cb = self.scn.control_a, self.scn.control_b
        drift = t.drift.reshape(n, size)
        ga = t.gain_a.reshape(n, ca.dim, size)
        gb = t.gain_b.reshape(n, cb.dim, size)
        kinks = np.empty((0, size))
        if ca.dim == 1:
            rows = []
            with np.errstate(divide="ignore", invalid="ignore"):
                for i in range(n):
                    offsets = [drift[i]]
                    if cb.dim == 1:
                        offsets = [drift[i] + gb[i, 0] * cb.lo[0], drift[i] + gb[i, 0] * cb.hi[0]]
                    for off in offsets:
                        a = -off / ga[i, 0]
                        rows.append(np.where((ga[i, 0] != 0) & (a > ca.lo[0]) & (a < ca.hi[0]), a, np.nan))
            kinks = np.array(rows)

        def node_major(x):
            return np.ascontiguousarray(np.moveaxis(x, -1, 0))

        self._flat = (
            node_major(drift), node_major(ga), node_major(gb),
            np.ascontiguousarray(t.cost0.reshape(size)),
            node_major(t.cost_a1.reshape(ca.dim, size)), node_major(t.cost_a2.reshape(ca.dim, size)),
            node_major(t.cost_b1.reshape(cb.dim, size)), node_major(t.cost_b2.reshape(cb.dim, size)),
            np.ascontiguousarray(ca.lattice(self.per_channel).T),
            node_major(kinks),
            np.ascontiguousarray(cb.lattice(self.per_channel).T),
            np.array(cb.lo), np.array(cb.hi),
        )
        return self._flat

    def upwind(self, p_minus, p_plus) -> np.ndarray:
        """Monotone upwind min-max Hamiltonian from one-sided differences ``(n, ...)``."""
        shape = self.terms.cost0.shape
        n = self.terms.drift.shape[0]
        dm = np.ascontiguousarray(np.asarray(p_minus, dtype=float).reshape(n, -1).T)
        dp = np.ascontiguousarray(np.asarray(p_plus, dtype=float).reshape(n, -1).T)
        out = np.empty(dm.shape[0])
        _upwind_kernel(dm, dp, *self._upwind_arrays(), out)
        return out.reshape(shape)


@njit(cache=True, nogil=True, error_model="numpy")
def _upwind_kernel(dm, dp, drift, ga, gb, c0, ca1, ca2, cb1, cb2, a_lat, a_kink, b_lat, b_lo, b_hi, out):
    # all per-node arrays are node-major: (size, ...)
    size, n = drift.shape
    na, ma = a_lat.shape
    nb, mb = b_lat.shape
    nka = a_kink.shape[1]
    a = np.empty(ma)
    b = np.empty(mb)
    fa = np.empty(n)
    coupled = np.empty(n, dtype=np.intp)
    for j in range(size):
        ncoupled = 0
        for i in range(n):
            for k in range(mb):
                if gb[j, i, k] != 0.0:
                    coupled[ncoupled] = i
                    ncoupled += 1
                    break
        best = np.inf
        for ia in range(na + nka):
            if ia < na:
                for k in range(ma):
                    a[k] = a_lat[ia, k]
            else:
                v = a_kink[j, ia - na]
                if v != v:  # nan: no kink here
                    continue
                a[0] = v
            base = c0[j]
            for k in range(ma):
                base += (ca1[j, k] + ca2[j, k] * a[k]) * a[k]
            ic = 0
            for i in range(n):
                f = drift[j, i]
                for k in range(ma):
                    f += ga[j, i, k] * a[k]
                fa[i] = f
                if ic < ncoupled and coupled[ic] == i:
                    ic += 1
                else:
                    base += max(f, 0.0) * dp[j, i] + min(f, 0.0) * dm[j, i]
            if ncoupled == 0:
                inner = base
                for k in range(mb):
                    lo_v = (cb1[j, k] + cb2[j, k] * b_lo[k]) * b_lo[k]
                    hi_v = (cb1[j, k] + cb2[j, k] * b_hi[k]) * b_hi[k]
                    inner += max(lo_v, hi_v) if cb2[j, k] >= 0 else _lattice_max(cb1[j, k], cb2[j, k], b_lat, k)
            elif mb == 1:
                # endpoints and sign changes of coupled components are exact for
                # a convex (or linear) cost in b; a concave cost adds the lattice
                inner = -np.inf
                extra = nb if cb2[j, 0] < 0 else 0
                for ib in range(2 + ncoupled + extra):
                    if ib == 0:
                        bv = b_lo[0]
                    elif ib == 1:
                        bv = b_hi[0]
                    elif ib < 2 + ncoupled:
                        i = coupled[ib - 2]
                        bv = -fa[i] / gb[j, i, 0]
                        if not (b_lo[0] < bv < b_hi[0]):
                            continue
                    else:
                        bv = b_lat[ib - 2 - ncoupled, 0]
                    v = base + (cb1[j, 0] + cb2[j, 0] * bv) * bv
                    for ic in range(ncoupled):
                        i = coupled[ic]
                        f = fa[i] + gb[j, i, 0] * bv
                        v += max(f, 0.0) * dp[j, i] + min(f, 0.0) * dm[j, i]
                    if v > inner:
                        inner = v
            else:
                inner = -np.inf
                for ib in range(nb):
                    v = base
                    for k in range(mb):
                        b[k] = b_lat[ib, k]
                        v += (cb1[j, k] + cb2[j, k] * b[k]) * b[k]
                    for ic in range(ncoupled):
                        i = coupled[ic]
                        f = fa[i]
                        for k in range(mb):
                            f += gb[j, i, k] * b[k]
                        v += max(f, 0.0) * dp[j, i] + min(f, 0.0) * dm[j, i]
                    if v > inner:
                        inner = v
            if inner < best:
                best = inner
        out[j] = best


@njit(cache=True, nogil=True, error_model="numpy")
def _lattice_max(lin, quad, b_lat, k):
    best = -np.inf
    for ib in range(b_lat.shape[0]):
        u = b_lat[ib, k]
        v = (lin + quad * u) * u
        if v > best:
            best = v
    return best


class LatticeHamiltonian:
    """Exhaustive min-max over tensor lattices of both control boxes."""

    def __init__(self, scn: Scenario, states, masked: bool = True, with_cost: bool = True,
                 per_channel: int = DEFAULT_LATTICE):
        states = np.asarray(states, dtype=float)
        self.scn = scn
        self.lattice_a = scn.control_a.lattice(per_channel)
        self.lattice_b = scn.control_b.lattice(per_channel)
        na, nb = self.lattice_a.shape[1], self.lattice_b.shape[1]
        trailing = states.shape[1:]
        self.f = np.empty((na, nb, states.shape[0], *trailing))
        self.c = np.zeros((na, nb, *trailing))
        inside = scn.inside_target(states) if masked else np.zeros(trailing, dtype=bool)
        for i in range(na):
            a = _pad(self.lattice_a[:, i], states)
            for j in range(nb):
                b = _pad(self.lattice_b[:, j], states)
                f = np.broadcast_to(scn.dynamics(states, a, b), self.f.shape[2:])
                self.f[i, j] = np.where(inside, 0.0, f)
                if with_cost:
                    c = np.broadcast_to(scn.running_cost(states, a, b), trailing)
                    self.c[i, j] = np.where(inside, 0.0, c)

    def dissipation(self) -> np.ndarray:
        return np.abs(self.f).max(axis=(0, 1))

    def evaluate(self, p):
        p = np.asarray(p, dtype=float)
        obj = self.c + np.einsum("i...,abi...->ab...", p, self.f)
        jb = np.argmax(obj, axis=1)  # first maximizer -> smallest b
        inner = np.take_along_axis(obj, jb[:, None], axis=1)[:, 0]
        ia = np.argmin(inner, axis=0)
        value = np.take_along_axis(inner, ia[None], axis=0)[0]
        jb_at = np.take_along_axis(jb, ia[None], axis=0)[0]
        return value, self.lattice_a[:, ia], self.lattice_b[:, jb_at]

    def upwind(self, p_minus, p_plus) -> np.ndarray:
        p_minus = np.asarray(p_minus, dtype=float)
        p_plus = np.asarray(p_plus, dtype=float)
        obj = self.c + np.einsum("i...,abi...->ab...", p_plus, np.maximum(self.f, 0.0))
        obj += np.einsum("i...,abi...->ab...", p_minus, np.minimum(self.f, 0.0))
        return obj.max(axis=1).min(axis=0)


def hamiltonian_model(scn: Scenario, states, masked: bool = True, with_cost: bool = True,
                      lattice: int | None = None):
    """Closed-form model for affine-quadratic games, lattice search otherwise.

    ``lattice`` is the per-channel point count (defaults differ per model).
    """
    if scn.structure == AFFINE_QUADRATIC:
        return AffineQuadraticHamiltonian(scn, states, masked, with_cost, lattice or AFFINE_CANDIDATES)
    return LatticeHamiltonian(scn, states, masked, with_cost, lattice or DEFAULT_LATTICE)


def lax_friedrichs(model, p_minus, p_plus, alpha, dissipation_sign: float = -1.0) -> np.ndarray:
    """``H((p- + p+)/2) + sign * sum_i alpha_i (p+_i - p-_i) / 2``.

    ``sign = -1`` is the usual forward-time form. Marching backward in time
    (``W(t - dt) = W(t) + dt * H``) needs ``sign = +1`` to stay monotone.
    """
    p_minus = np.asarray(p_minus, dtype=float)
    p_plus = np.asarray(p_plus, dtype=float)
    value, _, _ = model.evaluate((p_minus + p_plus) / 2)
    jump = np.einsum("i...,i...->...", alpha, p_plus - p_minus) / 2
    return value + dissipation_sign * jump


def optimize_controls(scn: Scenario, s, p, lattice: int | None = None) -> HamiltonianSample:
    model = hamiltonian_model(scn, s, lattice=lattice)
    value, a, b = model.evaluate(p)
    return HamiltonianSample(float(value), np.asarray(a, dtype=float), np.asarray(b, dtype=float),
                             model.dissipation())


def numerical_hamiltonian(scn: Scenario, s, p_minus, p_plus, lattice: int | None = None) -> float:
    model = hamiltonian_model(scn, s, lattice=lattice)
    return float(lax_friedrichs(model, p_minus, p_plus, model.dissipation()))
