import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hjcrt import builtin_linear2d, builtin_pursuit, numerical_hamiltonian, optimize_controls
from hjcrt.hamiltonian import (
    AffineQuadraticHamiltonian, LatticeHamiltonian, hamiltonian_model, lax_friedrichs,
)
from hjcrt.scenario import GENERIC

costate = st.floats(-10, 10, allow_nan=False)


def _random_states(scn, rng, n):
    if scn.name == "linear2d":
        return rng.uniform(-2, 2, size=(2, n))
    return np.stack([rng.uniform(-5, 20, n), rng.uniform(-10, 10, n), rng.uniform(0, 2 * np.pi, n)])


SCENARIOS = [builtin_linear2d(), builtin_pursuit(0.0), builtin_pursuit(0.1)]


def test_linear2d_hand_example():
    out = optimize_controls(builtin_linear2d(), np.array([1.0, 1.0]), np.array([0.0, 1.0]))
    assert out.value == -1.0
    np.testing.assert_array_equal(out.argmin_a, [-1.0])
    # b does not enter the objective: the tie goes to the smaller control
    np.testing.assert_array_equal(out.argmax_b, [-1.0])


def test_pursuit_hand_example():
    out = optimize_controls(builtin_pursuit(0.0), np.array([10.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]))
    assert out.value == pytest.approx(1.0)
    np.testing.assert_array_equal(out.argmin_a, [1.0])
    np.testing.assert_array_equal(out.argmax_b, [1.0])


def test_pursuit_quadratic_vertex_is_clamped():
    # lambda = 0.1 at the origin of K's exterior: a-part is 0.1 a^2 + a*(p . g_a)
    scn = builtin_pursuit(0.1)
    s = np.array([6.0, 0.0, 0.0])
    p = np.array([0.0, 0.3, 0.0])  # g_a = (y, -x, -1) = (0, -6, -1): lin = -1.8 -> vertex 9 clamps to 1
    out = optimize_controls(scn, s, p)
    np.testing.assert_array_equal(out.argmin_a, [1.0])
    p = np.array([0.0, 0.01, 0.0])  # lin = -0.06 -> vertex 0.3 inside the box
    out = optimize_controls(scn, s, p)
    assert out.argmin_a[0] == pytest.approx(0.3)


def test_target_nodes_have_zero_hamiltonian():
    scn = builtin_linear2d()
    s = np.array([0.3, 0.1])
    assert optimize_controls(scn, s, np.array([5.0, -7.0])).value == 0.0
    assert numerical_hamiltonian(scn, s, np.array([1.0, -3.0]), np.array([4.0, 2.0])) == 0.0


def test_lax_friedrichs_hand_example():
    # H(0, 1) = -1 and alpha_y = max |-x + a| = 2 at x = 1
    val = numerical_hamiltonian(builtin_linear2d(), np.array([1.0, 1.0]), np.array([0.0, 0.0]),
                                np.array([0.0, 2.0]))
    assert val == pytest.approx(-3.0, abs=1e-14)


@pytest.mark.parametrize("scn", SCENARIOS, ids=lambda s: f"{s.name}-{s.params.get('lambda', 0)}")
def test_lax_friedrichs_and_upwind_consistency(scn):
    rng = np.random.default_rng(5)
    s = _random_states(scn, rng, 200)
    p = rng.normal(scale=3.0, size=s.shape)
    model = hamiltonian_model(scn, s)
    value, _, _ = model.evaluate(p)
    np.testing.assert_allclose(lax_friedrichs(model, p, p, model.dissipation()), value, atol=1e-12)
    np.testing.assert_allclose(model.upwind(p, p), value, atol=1e-12)
    for k in range(5):
        assert numerical_hamiltonian(scn, s[:, k], p[:, k], p[:, k]) == pytest.approx(
            optimize_controls(scn, s[:, k], p[:, k]).value, abs=1e-12)


@pytest.mark.parametrize("scn", SCENARIOS, ids=lambda s: f"{s.name}-{s.params.get('lambda', 0)}")
def test_dissipation_bounds_hamiltonian_slope(scn):
    rng = np.random.default_rng(7)
    s = _random_states(scn, rng, 100)
    p = rng.normal(scale=3.0, size=s.shape)
    model = hamiltonian_model(scn, s)
    alpha = model.dissipation()
    h = 1e-6
    for i in range(s.shape[0]):
        e = np.zeros_like(p)
        e[i] = h
        slope = (model.evaluate(p + e)[0] - model.evaluate(p - e)[0]) / (2 * h)
        assert np.all(np.abs(slope) <= alpha[i] + 1e-6)


@pytest.mark.parametrize("scn", SCENARIOS[:2], ids=["linear2d", "pursuit-0"])
def test_closed_form_matches_dense_lattice_for_affine_games(scn):
    rng = np.random.default_rng(9)
    s = _random_states(scn, rng, 100)
    p = rng.normal(scale=3.0, size=s.shape)
    closed, _, _ = AffineQuadraticHamiltonian(scn, s).evaluate(p)
    dense, _, _ = LatticeHamiltonian(scn, s, per_channel=33).evaluate(p)
    np.testing.assert_allclose(closed, dense, atol=1e-6)


def test_closed_form_brackets_dense_lattice_for_quadratic_cost():
    # with lambda > 0 the a-vertex is generally off the lattice, so the
    # lattice min is an upper bound within the quadratic's lattice gap
    scn = builtin_pursuit(0.1)
    rng = np.random.default_rng(10)
    s = _random_states(scn, rng, 100)
    p = rng.normal(scale=3.0, size=s.shape)
    closed, a, b = AffineQuadraticHamiltonian(scn, s).evaluate(p)
    dense, _, _ = LatticeHamiltonian(scn, s, per_channel=33).evaluate(p)
    gap = 0.1 * (1 / 32) ** 2  # lambda * (half lattice step)^2
    assert np.all(dense >= closed - 1e-9)
    assert np.all(dense <= closed + gap + 1e-9)
    # the returned saddle pair attains the value
    f = scn.dynamics(s, a, b)
    c = scn.running_cost(s, a, b)
    outside = ~scn.inside_target(s)
    np.testing.assert_allclose((c + np.einsum("ik,ik->k", p, f))[outside], closed[outside], atol=1e-10)


def test_generic_structure_uses_lattice():
    scn = dataclasses.replace(builtin_linear2d(), structure=GENERIC)
    model = hamiltonian_model(scn, np.zeros((2, 3)))
    assert isinstance(model, LatticeHamiltonian)
    out = optimize_controls(scn, np.array([1.0, 1.0]), np.array([0.0, 1.0]))
    assert out.value == pytest.approx(-1.0)


def test_zero_cost_reduction_for_unit_cost():
    scn = builtin_linear2d()
    rng = np.random.default_rng(2)
    s = rng.uniform(-2, 2, size=(2, 300))
    p = rng.normal(size=s.shape)
    with_cost, _, _ = hamiltonian_model(scn, s).evaluate(p)
    without, _, _ = hamiltonian_model(scn, s, with_cost=False).evaluate(p)
    outside = ~scn.inside_target(s)
    np.testing.assert_allclose(with_cost[outside], 1.0 + without[outside], atol=1e-14)


@given(pm=st.tuples(costate, costate, costate), pp=st.tuples(costate, costate, costate),
       bump=st.floats(0, 5), axis=st.integers(0, 2), seed=st.integers(0, 1000))
def test_upwind_form_is_monotone(pm, pp, bump, axis, seed):
    """Raising p+ never lowers the upwind Hamiltonian; raising p- never raises it."""
    scn = SCENARIOS[2]
    s = _random_states(scn, np.random.default_rng(seed), 1)
    model = hamiltonian_model(scn, s)
    pm = np.array(pm)[:, None]
    pp = np.array(pp)[:, None]
    e = np.zeros_like(pm)
    e[axis] = bump
    base = model.upwind(pm, pp)
    assert model.upwind(pm, pp + e)[0] >= base[0] - 1e-12
    assert model.upwind(pm + e, pp)[0] <= base[0] + 1e-12


@given(p=st.tuples(costate, costate), x=st.floats(-2, 2), y=st.floats(-2, 2))
def test_upwind_affine_matches_lattice_when_consistent(p, x, y):
    scn = SCENARIOS[0]
    s = np.array([[x], [y]])
    p = np.array(p)[:, None]
    a = AffineQuadraticHamiltonian(scn, s).upwind(p, p)
    b = LatticeHamiltonian(scn, s, per_channel=9).evaluate(p)[0]
    np.testing.assert_allclose(a, b, atol=1e-12)
