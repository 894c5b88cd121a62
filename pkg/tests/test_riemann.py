import numpy as np
import pytest
from hypothesis import given, strategies as st

from gradflux.flux import FluxPair, tangent_upper
from gradflux.riemann import (
    RAREFACTION, FanSolution, enumerate_admissible_alternatives, eval_fan, solve_riemann,
)
from gradflux.validate import check_fan
from oracles import PiecewiseLinearData, lax_oleinik

P = FluxPair.quadratic(1.0)
R2 = np.sqrt(2.0)
states = st.floats(-3, 3, allow_nan=False)
thetas = st.sampled_from([0, 1])


def _mixed(u, th):
    return np.where(th == 1, P.f(u), P.g(u))


def test_case_2a_golden():
    fan = solve_riemann(P, 2.0, 0.0, 1, 0)
    assert fan.case == "2A" and len(fan.waves) == 1
    assert abs(fan.waves[0].speed - 1.5) <= 1e-12


def test_case_2b_golden():
    fan = solve_riemann(P, 0.0, 0.0, 1, 0)
    assert fan.case == "2B"
    rare, shock = fan.waves
    assert rare.kind == RAREFACTION and (rare.xi_lo, rare.xi_hi) == pytest.approx((0.0, R2), abs=1e-12)
    assert abs(shock.speed - R2) <= 1e-12


def test_constant_fan():
    fan = solve_riemann(P, 0.7, 0.7, 1, 1)
    assert fan.waves == () and fan.interface_count == 0


def test_case_4b_closed_form():
    fan = solve_riemann(P, -1.0, 1.0, 0, 0)
    assert fan.case == "4B" and fan.interface_count == 2
    left, mid, right = fan.waves
    assert left.speed == pytest.approx(-1 - R2, abs=1e-12)
    assert right.speed == pytest.approx(1 + R2, abs=1e-12)
    assert (mid.u_left, mid.u_right) == pytest.approx((-1 - R2, 1 + R2), abs=1e-12)
    for w in (left, right):
        fl = _mixed(np.array(w.u_left), np.array(w.theta_left))
        fr = _mixed(np.array(w.u_right), np.array(w.theta_right))
        assert abs(w.speed * (w.u_right - w.u_left) - (fr - fl)) <= 1e-12
    assert check_fan(fan).ok


def test_boundary_dispatches_to_2a():
    u_star = tangent_upper(P, 0.0)
    assert solve_riemann(P, u_star, 0.0, 1, 0).case == "2A"


def test_eval_fan_examples():
    fan = solve_riemann(P, 0.0, 0.0, 1, 0)
    u, th = eval_fan(fan, 1.0, 1.0)
    assert (float(u), int(th)) == (1.0, 1)
    assert eval_fan(fan, 1.0, -100.0) == (0.0, 1)
    assert eval_fan(fan, 1.0, 100.0) == (0.0, 0)
    # on the shock slope the right state is returned
    assert eval_fan(fan, 1.0, R2) == (0.0, 0)


def test_alternatives():
    fans = enumerate_admissible_alternatives(P, 0.5, -0.5, 0, 0)
    assert len(fans) == 2 and [F.interface_count for F in fans] == [0, 2]
    assert all(check_fan(F).ok for F in fans)
    assert len(enumerate_admissible_alternatives(P, 4.0, -4.0, 0, 0)) == 1
    assert len(enumerate_admissible_alternatives(P, 0.3, 0.3, 0, 0)) == 1


@given(states, states, thetas, thetas)
def test_every_fan_is_admissible_and_minimal(um, up, thm, thp):
    fan = solve_riemann(P, um, up, thm, thp)
    assert check_fan(fan).ok
    alts = enumerate_admissible_alternatives(P, um, up, thm, thp)
    assert all(check_fan(F).ok for F in alts)
    assert fan.interface_count == min(F.interface_count for F in alts)


@given(states, states, thetas, thetas, st.floats(0.1, 10.0))
def test_self_similar(um, up, thm, thp, s):
    fan = solve_riemann(P, um, up, thm, thp)
    x = np.linspace(-6, 6, 37) + 1e-3
    u1, th1 = eval_fan(fan, 1.0, x)
    u2, th2 = eval_fan(fan, s, s * x)
    assert np.allclose(u1, u2, atol=1e-12) and np.array_equal(th1, th2)


@given(states, states, st.sampled_from([0, 1]))
def test_single_flux_cases_match_lax_oleinik(um, up, th):
    # f with theta=(1,1); g with theta=(0,0) and a downward jump
    if th == 0 and um < up:
        um, up = up, um
    fan = solve_riemann(P, um, up, th, th)
    data = PiecewiseLinearData([], um, up, 0.0, 0.0)
    xs = np.linspace(-4, 4, 29) + 0.0137
    shocks = np.array([w.speed for w in fan.shocks])
    xs = xs[[np.all(np.abs(x - shocks) > 0.01) for x in xs]]
    ref = np.array([lax_oleinik(data, 1.0, x) for x in xs])
    assert np.max(np.abs(eval_fan(fan, 1.0, xs)[0] - ref), initial=0.0) <= 1e-6


def test_fan_solution_queries():
    fs = FanSolution(solve_riemann(P, 0.0, 0.0, 1, 0), x0=0.5, t0=1.0, horizon=3.0)
    assert fs.query(2.0, np.array([1.0]))[0] == pytest.approx(0.5)
    assert fs.interface_positions(2.0) == pytest.approx([0.5 + R2])
    bp = fs.breakpoints(2.0)
    assert np.array_equal(fs.query(2.0, bp, "-"), [0.0, R2])
    assert fs.query(1.0, np.array([0.4, 0.6])).tolist() == [0.0, 0.0]


@given(st.floats(1e-4, 1e-2))
def test_2a_speed_approaches_tangent_speed(eps):
    u_star = tangent_upper(P, 0.0)
    lam = solve_riemann(P, u_star + eps, 0.0, 1, 0).waves[0].speed
    assert abs(lam - P.f.deriv(u_star)) <= 0.5 * eps**2
