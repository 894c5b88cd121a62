import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gradflux.artifacts import emit_snapshot, parse_snapshot, snapshot_grid
from gradflux.cauchy import solve
from gradflux.errors import ParseError, ValidationError
from gradflux.riemann import FanSolution
from gradflux.scenario import emit_scenario, parse_scenario


def riemann_text(um=2.0, up=0.0, thm=1, thp=0, **extra):
    d = {"flux": {"kind": "quadratic", "gap": 1.0},
         "initial": {"kind": "riemann", "u_minus": um, "u_plus": up, "theta_minus": thm, "theta_plus": thp}}
    d.update(extra)
    return json.dumps(d)


PROFILE = {
    "flux": {"kind": "polynomial", "f": [1.0, 0.0, 0.5], "g": [0.0, 0.0, 0.5], "domain": [-10, 10]},
    "initial": {"kind": "profile",
                "segments": [{"x": [-1.0, 0.0], "u": [0.0, 1.0]}, {"x": [0.0, 1.0], "u": [1.0, -0.5]}],
                "theta_left": 1, "theta_jumps": [0.0]},
    "horizon": 0.5,
    "output": {"snapshot_times": [0.25, 0.5], "grid": 11},
}


def test_defaults_are_filled():
    sc = parse_scenario(riemann_text())
    d = sc.data
    assert d["horizon"] == 1.0 and d["t0"] == 0.0 and d["seed"] == 0
    assert d["solver"] == {"n_steps": 256, "tolerance": 1e-12}
    assert d["output"]["snapshot_times"] == [1.0] and d["output"]["grid"] == 1001
    assert d["flux"]["domain"] == [-50.0, 50.0] and d["spike"] is None


@pytest.mark.parametrize("text", [riemann_text(), json.dumps(PROFILE),
                                  riemann_text(spike={"tau": 0.1, "x": 3.0, "kind": "max"})])
def test_round_trip_is_identity(text):
    once = emit_scenario(parse_scenario(text))
    assert emit_scenario(parse_scenario(once)) == once
    assert parse_scenario(once).data == parse_scenario(text).data


@given(st.floats(-3, 3), st.floats(-3, 3), st.sampled_from([0, 1]), st.sampled_from([0, 1]),
       st.floats(-2, 2), st.floats(0.1, 5))
def test_round_trip_property(um, up, thm, thp, x0, horizon):
    text = riemann_text(um, up, thm, thp, horizon=horizon)
    d = json.loads(text)
    d["initial"]["x0"] = x0
    once = emit_scenario(parse_scenario(json.dumps(d)))
    assert emit_scenario(parse_scenario(once)) == once
    assert json.loads(once)["initial"]["u_minus"] == um


def test_empty_text_reports_line_one():
    with pytest.raises(ParseError, match="line 1"):
        parse_scenario("   \n")


def test_bad_json_reports_line():
    with pytest.raises(ParseError, match="line 2"):
        parse_scenario('{"flux": 1,\n  oops}')


@pytest.mark.parametrize("mutate,where", [
    (lambda d: d.update(colour="red"), "colour"),
    (lambda d: d["flux"].update(extra=1), "flux.extra"),
    (lambda d: d["initial"].update(u_minus="a"), "initial.u_minus"),
    (lambda d: d["initial"].update(theta_plus=2), "initial.theta_plus"),
    (lambda d: d["initial"].pop("u_plus"), "initial.u_plus"),
    (lambda d: d.update(output={"grid": 1}), "output.grid"),
    (lambda d: d.update(spike={"tau": 0.1, "x": 0.0, "kind": "wide"}), "spike.kind"),
])
def test_schema_errors_name_the_key(mutate, where):
    d = json.loads(riemann_text())
    mutate(d)
    with pytest.raises(ParseError, match=where.replace(".", r"\.")):
        parse_scenario(json.dumps(d))


def test_gap_floor_is_a_validation_error():
    d = json.loads(riemann_text())
    d["flux"]["gap"] = -1.0
    with pytest.raises(ValidationError):
        parse_scenario(json.dumps(d))


def test_incompatible_interfaces_are_a_validation_error():
    d = json.loads(json.dumps(PROFILE))
    d["initial"]["interfaces"] = {"positions": [0.5]}
    with pytest.raises(ValidationError, match="incompatible"):
        parse_scenario(json.dumps(d))


def test_riemann_prediction_case_2a():
    sc = parse_scenario(riemann_text())
    fan = sc.riemann_fan()
    assert fan.case == "2A" and fan.waves[0].speed == pytest.approx(1.5, abs=1e-14)


def test_override_reparses():
    sc = parse_scenario(riemann_text()).override(grid=5, snapshot_times=[0.5], seed=3, validate=True)
    assert sc.output["grid"] == 5 and sc.output["snapshot_times"] == [0.5]
    assert sc.data["seed"] == 3 and sc.output["validate"]


def test_snapshot_grid_doubling_keeps_shared_points():
    a = snapshot_grid(-3.0, 7.0, 101)
    b = snapshot_grid(-3.0, 7.0, 201)
    assert np.array_equal(a, b[::2])
    assert a[0] == -3.0 and a[-1] == 7.0


def test_snapshot_text_is_deterministic_and_parses():
    sc = parse_scenario(riemann_text())
    sol = FanSolution(sc.riemann_fan(), 0.0, 0.0, 1.0)
    grid = snapshot_grid(-2.0, 3.0, 51)
    text = emit_snapshot(sol, 1.0, grid)
    assert text == emit_snapshot(sol, 1.0, grid)
    assert "right limits" in text.splitlines()[1]
    t, x, u, th = parse_snapshot(text)
    assert t == 1.0 and np.array_equal(x, grid)
    assert np.array_equal(u, sol.query(1.0, grid)) and np.array_equal(th, sol.theta(1.0, grid))


def test_constant_solution_gives_constant_column():
    sc = parse_scenario(riemann_text(0.25, 0.25, 0, 0))
    tl = solve(sc.problem)
    _, _, u, th = parse_snapshot(emit_snapshot(tl, 1.0, snapshot_grid(-1, 1, 9)))
    assert np.all(u == 0.25) and np.all(th == 0)


def test_snapshot_right_limit_at_a_shock():
    # the 2A shock sits at x = 1.5 at t = 1; the grid point on it reports the downstream state
    sc = parse_scenario(riemann_text())
    sol = FanSolution(sc.riemann_fan(), 0.0, 0.0, 1.0)
    _, x, u, th = parse_snapshot(emit_snapshot(sol, 1.0, np.array([1.0, 1.5, 2.0])))
    assert list(u) == [2.0, 0.0, 0.0] and list(th) == [1, 0, 0]


def test_malformed_snapshot_rejected():
    with pytest.raises(ParseError):
        parse_snapshot("x,u,theta\n0,1,0\n")
    with pytest.raises(ParseError, match="line 3"):
        parse_snapshot("# snapshot t=1\nx,u,theta\n0,1\n")
