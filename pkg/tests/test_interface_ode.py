import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp

from gradflux.errors import DegenerateDenominator
from gradflux.evolution import make_flat, make_sharp_g
from gradflux.flux import FluxPair
from gradflux.interface_ode import (
    InterfaceProblem, Trajectory, default_grid, eval_H, measure_contraction, picard_solve,
    step_integrate, weighted_distance,
)
from gradflux.profile import PiecewiseMonotoneProfile

P = FluxPair.quadratic(1.0)
const = PiecewiseMonotoneProfile.constant
ROOT2 = np.sqrt(2.0)


def flat_vs_constant(c, t_start=0.0, y_start=0.0):
    # left trace is max(0, y/t) from the flat f-fan, right trace is the constant c
    return InterfaceProblem(P, make_flat(P.f, const(0.0)), make_sharp_g(P.g, const(c)), 1, 0,
                            t_start, y_start)


def test_golden_speeds():
    pr = InterfaceProblem(P, make_flat(P.f, const(2.0)), make_sharp_g(P.g, const(0.0)), 1, 0)
    assert pr.predicted_speed == pytest.approx(1.5, abs=1e-14)
    tr = step_integrate(pr, 1.0)
    assert tr(1.0) == pytest.approx(1.5, abs=1e-12)
    pr = flat_vs_constant(0.0)
    assert pr.predicted_speed == pytest.approx(ROOT2, abs=1e-14)
    assert step_integrate(pr, 2.0)(2.0) == pytest.approx(2 * ROOT2, abs=1e-12)


@given(st.floats(-1.0, 1.0))
def test_self_similar_speed(c):
    # (s - c)^2 = 2 solves the quotient when the left trace is s itself
    tr = step_integrate(flat_vs_constant(c), 1.0)
    assert tr(1.0) == pytest.approx(c + ROOT2, abs=1e-10)


def test_off_center_start_matches_reference_ode():
    c = -0.3
    pr = flat_vs_constant(c, t_start=1.0, y_start=0.2)

    def rhs(t, y):
        ul = max(0.0, y[0] / t)
        return [(ul * ul / 2 + 1 - c * c / 2) / (ul - c)]

    ref = solve_ivp(rhs, (1.0, 3.0), [0.2], method="DOP853", rtol=1e-13, atol=1e-14, dense_output=True)
    ts = np.linspace(1.0, 3.0, 41)
    st_ = step_integrate(pr, 3.0)
    pc = picard_solve(pr, 3.0, tube=False)
    assert np.max(np.abs(st_(ts) - ref.sol(ts)[0])) < 1e-9
    assert np.max(np.abs(pc(ts) - ref.sol(ts)[0])) < 1e-9


def test_step_and_picard_agree_in_weighted_metric():
    pr = flat_vs_constant(-0.2)
    st_ = step_integrate(pr, 0.5)
    pc = picard_solve(pr, 0.5, tube=False)
    assert weighted_distance(st_, pc, default_grid(0.0, 0.5)) < 1e-8


def test_contraction_shrinks_on_short_horizons():
    pr = flat_vs_constant(0.0)
    factors = []
    for t0 in (0.1, 0.01):
        y = Trajectory.linear(0.0, 0.0, ROOT2, t0, pr)
        z = Trajectory.linear(0.0, 0.0, ROOT2 + 0.01, t0, pr)
        factors.append(measure_contraction(pr, y, z))
    assert max(factors) <= 0.5
    y = Trajectory.linear(0.0, 0.0, ROOT2, 0.1, pr)
    assert measure_contraction(pr, y, y) == 0.0


def test_coinciding_traces_are_degenerate():
    pr = flat_vs_constant(0.0)
    with pytest.raises(DegenerateDenominator) as exc:
        eval_H(pr, 1.0, -1.0)
    assert exc.value.t == 1.0 and exc.value.x == -1.0


def test_eval_h_is_vectorized():
    pr = flat_vs_constant(0.0)
    t = np.array([1.0, 2.0])
    assert np.allclose(eval_H(pr, t, ROOT2 * t), ROOT2, atol=1e-14)


def test_trajectory_helpers():
    pr = flat_vs_constant(0.0)
    y = Trajectory.linear(0.0, 0.0, ROOT2, 1.0, pr)
    assert y.y_start == 0.0 and y(0.5) == pytest.approx(ROOT2 / 2)
    assert y.truncate(0.5).t_end == 0.5
    rows = y.rows(np.array([0.5, 1.0]))
    assert rows.shape == (2, 5)
    assert np.allclose(rows[:, 2], ROOT2) and np.allclose(rows[:, 4], 0.0)
    z = Trajectory.linear(0.0, 0.0, 1.0, 1.0, pr)
    assert weighted_distance(y, z, [0.25, 0.5, 1.0]) == pytest.approx(ROOT2 - 1.0)
    assert weighted_distance(y, z, [0.0]) == 0.0


def test_default_grid_is_increasing_and_spans():
    g = default_grid(0.5, 2.0)
    assert g[0] == 0.5 and g[-1] == 2.0 and np.all(np.diff(g) > 0)
