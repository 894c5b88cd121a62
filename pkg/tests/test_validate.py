import json
from dataclasses import replace

import numpy as np
import pytest

from gradflux.cauchy import CauchyProblem, solve
from gradflux.errors import DegenerateJump
from gradflux.flux import FluxPair
from gradflux.riemann import FanSolution, solve_riemann
from gradflux.validate import (
    WEAK_FLOOR, bump_battery, check_fan, check_lax, check_mass, check_rh, check_selfsimilar,
    check_tv, check_weak_form, l1_distance, mass_balance, total_variation, validate_timeline,
    weak_residual,
)

P = FluxPair.quadratic(1.0)
ROOT2 = np.sqrt(2.0)


def fan_2b(speed=None):
    fan = solve_riemann(P, 0.0, 0.0, 1, 0)
    if speed is None:
        return fan
    # the interface trails the rarefaction 0 -> sqrt2
    w = replace(fan.waves[-1], xi_lo=speed, xi_hi=speed)
    return replace(fan, waves=fan.waves[:-1] + (w,))


def test_rh_and_lax_by_hand():
    # equal states carry no jump to test, even across a flux switch
    with pytest.raises(DegenerateJump):
        check_rh(P, 0.0, 1, 0.0, 0, 1.0)
    # f(sqrt2) = 2, g(0) = 0 across [sqrt2, 0]: speed sqrt2 balances exactly
    assert check_rh(P, ROOT2, 1, 0.0, 0, ROOT2) == pytest.approx(0.0, abs=1e-15)
    assert check_rh(P, ROOT2, 1, 0.0, 0, 1.0) == pytest.approx(2.0 - ROOT2, abs=1e-15)
    assert check_lax(P, ROOT2, 1, 0.0, 0, ROOT2) == pytest.approx(0.0, abs=1e-15)
    assert check_lax(P, 1.0, 0, 2.0, 0, 1.5) < 0


def test_check_fan_accepts_solver_fans():
    for data in ((2.0, 0.0, 1, 0), (0.0, 0.0, 1, 0), (0.0, 0.5, 0, 1), (-0.5, 0.5, 0, 0)):
        assert check_fan(solve_riemann(P, *data)).ok


def test_check_fan_rejects_wrong_speed():
    rep = check_fan(fan_2b(2.0))
    assert not rep.checks["rh"].passed
    assert rep.checks["rh"].location == {"wave": 1}


def test_weak_residual_separates_right_and_wrong_speeds():
    good = FanSolution(fan_2b(), 0.0, 0.0, 1.0)
    bad = FanSolution(fan_2b(2.0), 0.0, 0.0, 1.0)
    assert check_weak_form(good).passed
    res = check_weak_form(bad)
    assert not res.passed
    # the wrong fan's residual plateaus instead of shrinking under refinement
    fine = [r[1] for r in res.rows]
    assert max(fine) > 1e-3
    ratios = [r[2] for r in res.rows if r[1] > WEAK_FLOOR]
    assert min(ratios) < 1.5


def test_weak_residual_vanishes_for_constants():
    tl = solve(CauchyProblem.riemann(P, 0.3, 0.3, 0, 0))
    for b in bump_battery(tl, n=3):
        assert abs(weak_residual(tl, b)) < 1e-13


def test_total_variation_of_fans():
    sol = FanSolution(solve_riemann(P, 2.0, 0.0, 1, 0), 0.0, 0.0, 1.0)
    assert total_variation(sol, 0.5) == pytest.approx(2.0, abs=1e-14)
    sol = FanSolution(solve_riemann(P, 0.0, 0.0, 1, 0), 0.0, 0.0, 1.0)
    # rarefaction 0 -> sqrt2 then the interface back to 0
    assert total_variation(sol, 1.0) == pytest.approx(2 * ROOT2, abs=1e-12)
    assert check_tv(sol).passed


def test_mass_balance_on_exact_fan():
    sol = FanSolution(solve_riemann(P, 0.0, 0.0, 1, 0), 0.0, 0.0, 1.0)
    assert abs(mass_balance(sol, -1.0, 2.0, 0.2, 0.9)) < 1e-10
    assert check_mass(sol).passed
    bad = FanSolution(fan_2b(2.0), 0.0, 0.0, 1.0)
    assert abs(mass_balance(bad, -1.0, 2.0, 0.2, 0.9)) > 1e-2


def test_l1_distance_between_shifted_shocks():
    # both fans end in a jump of height sqrt2 from the same state; speeds differ by d
    d = 0.25
    a = FanSolution(fan_2b(), 0.0, 0.0, 1.0)
    b = FanSolution(fan_2b(ROOT2 + d), 0.0, 0.0, 1.0)
    assert l1_distance(a, b, 1.0, -3.0, 3.0) == pytest.approx(d * ROOT2, abs=1e-12)
    assert l1_distance(a, a, 1.0) == 0.0


def test_selfsimilarity_check():
    sol = FanSolution(solve_riemann(P, -0.5, 0.5, 0, 0), 0.0, 0.0, 1.0)
    assert check_selfsimilar(sol).passed


def test_validate_timeline_report_serializes():
    tl = solve(CauchyProblem.riemann(P, 2.0, 0.0, 1, 0, horizon=1.0))
    rep = validate_timeline(tl)
    assert rep.ok, rep.summary_lines()
    data = json.loads(rep.to_json())
    assert data["ok"] and set(data["checks"]) >= {"rh", "lax", "weak_form", "mass", "tv"}
    assert all(line.startswith("PASS") for line in rep.summary_lines())
