import numpy as np
import pytest
from hypothesis import given, strategies as st

from gradflux.errors import DegenerateJump, RootOutOfDomain, ValidationError
from gradflux.flux import (
    ConvexFlux, FluxPair, secant_speed, tangency_residual, tangent_lower,
    tangent_pair_from_point, tangent_upper,
)
from oracles import bisect_tangency

R2 = np.sqrt(2.0)
states = st.floats(-5, 5, allow_nan=False)


def _oracle(P, a, upper):
    return bisect_tangency(lambda w: float(P.f(w)), lambda w: float(P.f.deriv(w)),
                           lambda w: float(P.g(w)), a, upper)


def test_secant_examples(pair):
    assert secant_speed(pair, 2.0, 1, 0.0, 0) == pytest.approx(1.5, abs=1e-14)
    assert secant_speed(pair, 1.0, 1, 0.0, 1) == pytest.approx(0.5, abs=1e-14)
    assert secant_speed(pair, 0.0, 0, -2.0, 0) == pytest.approx(-1.0, abs=1e-14)


def test_secant_degenerate(pair):
    with pytest.raises(DegenerateJump):
        secant_speed(pair, 1.0, 1, 1.0, 0)


def test_tangent_golden(pair):
    assert abs(tangent_upper(pair, 0.0) - R2) <= 1e-12
    assert abs(tangent_upper(pair, 3.0) - (3 + R2)) <= 1e-12
    assert abs(tangent_upper(pair, 3.0) - _oracle(pair, 3.0, True)) <= 1e-10
    assert abs(tangent_lower(pair, 0.0) + R2) <= 1e-12


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("a", [-2.0, -1.0, 0.0, 1.0, 2.0])
def test_tangent_closed_form_and_bisection(c, a):
    P = FluxPair.quadratic(c)
    up, lo = tangent_upper(P, a), tangent_lower(P, a)
    assert abs(up - (a + np.sqrt(2 * c))) <= 1e-10
    assert abs(lo - (a - np.sqrt(2 * c))) <= 1e-10
    assert abs(up - _oracle(P, a, True)) <= 1e-10
    assert abs(lo - _oracle(P, a, False)) <= 1e-10


def test_tangent_pair(pair):
    u1, u2 = tangent_pair_from_point(pair, 0.0)
    assert (u1, u2) == pytest.approx((-R2, R2), abs=1e-12)
    u1, u2 = tangent_pair_from_point(pair, 1.0)
    assert (u1, u2) == pytest.approx((1 - R2, 1 + R2), abs=1e-12)
    # speeds of the two chords from (u~, g(u~)): left one slower
    s1 = secant_speed(pair, u1, 1, 1.0, 0)
    s2 = secant_speed(pair, 1.0, 0, u2, 1)
    assert s1 < s2


def test_tangent_nonquadratic_matches_bisection():
    f = ConvexFlux((1.0, 0.2, 0.5, 0.0, 0.05), domain=(-10, 10), name="f")
    g = ConvexFlux((0.0, 0.0, 0.5), domain=(-10, 10), name="g")
    P = FluxPair(f, g)
    for a in (-1.0, 0.0, 0.7):
        assert abs(tangent_upper(P, a) - _oracle(P, a, True)) <= 1e-10
        assert abs(tangent_lower(P, a) - _oracle(P, a, False)) <= 1e-10


def test_domain_exit():
    P = FluxPair.quadratic(1.0, domain=(-2.0, 2.0))
    with pytest.raises(RootOutOfDomain):
        tangent_upper(P, 1.5)


def test_load_time_checks():
    with pytest.raises(ValidationError, match="gap_floor"):
        FluxPair(ConvexFlux.quadratic(0.0, name="f"), ConvexFlux.quadratic(0.0, name="g"))
    with pytest.raises(ValidationError):
        ConvexFlux((0.0, 1.0), name="linear")
    with pytest.raises(ValidationError):
        ConvexFlux((0.0, 0.0, 0.0, 1.0), domain=(-1, 1))


@given(states)
def test_tangency_residual_and_ordering(a):
    P = FluxPair.quadratic(1.0)
    up, lo = tangent_upper(P, a), tangent_lower(P, a)
    assert up > a > lo
    assert abs(tangency_residual(P, a, up)) <= 1e-10 * (1 + abs(float(P.f(up))))
    assert abs(tangency_residual(P, a, lo)) <= 1e-10 * (1 + abs(float(P.f(lo))))


@given(states)
def test_reflection_symmetry(a):
    P = FluxPair.quadratic(1.0)
    assert tangent_lower(P, a) == pytest.approx(-tangent_upper(P, -a), abs=1e-12)


@given(st.lists(states, min_size=2, max_size=8, unique=True))
def test_tangent_upper_increasing(xs):
    P = FluxPair.quadratic(1.0)
    xs = sorted(xs)
    # distinct beyond roundoff of a + sqrt(2)
    xs = [b for a, b in zip([-np.inf] + xs, xs) if b - a > 1e-9]
    ups = [tangent_upper(P, a) for a in xs]
    assert all(b > a for a, b in zip(ups, ups[1:]))


@given(states, states)
def test_f_on_left_changes_speed_as_expected(um, up):
    # raising the left flux value from g to f moves the speed by gap/(u+ - u-)
    if abs(um - up) < 1e-6:
        return
    P = FluxPair.quadratic(1.0)
    s_f = secant_speed(P, um, 1, up, 0)
    s_g = secant_speed(P, um, 0, up, 0)
    assert np.sign(um - up) * (s_f - s_g) > 0
    assert s_f - s_g == pytest.approx(1.0 / (um - up), rel=1e-9)


def test_derivative_consistency():
    f = ConvexFlux((1.0, 0.2, 0.5, 0.0, 0.05), domain=(-3, 3))
    u = np.linspace(-3, 3, 101)
    h = 1e-6
    fd = (f(u + h) - f(u - h)) / (2 * h)
    assert np.max(np.abs(fd - f.deriv(u))) <= 1e-6
    assert np.allclose(f.deriv(f.deriv_inv(f.deriv(u))), f.deriv(u), atol=1e-10)
