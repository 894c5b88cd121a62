import numpy as np
import pytest

from gradflux.cauchy import (
    CauchyProblem, Region, State, inject_spike, interface_problems, localize, normalize, solve,
)
from gradflux.errors import Incompatible, NotEligible
from gradflux.evolution import IncreasingEvolution, StaircaseEvolution
from gradflux.flux import FluxPair
from gradflux.profile import InterfaceSet, PiecewiseMonotoneProfile, Segment, ThetaField
from gradflux.riemann import FanSolution, solve_riemann

P = FluxPair.quadratic(1.0)
ROOT2 = np.sqrt(2.0)

RIEMANN_DATA = {
    "1": (1.0, -1.0, 1, 1),
    "2A": (2.0, 0.0, 1, 0),
    "2B": (0.0, 0.0, 1, 0),
    "3A": (0.0, -2.0, 0, 1),
    "3B": (0.0, 0.5, 0, 1),
    "4A": (0.5, -0.5, 0, 0),
    "4B": (-0.5, 0.5, 0, 0),
}


@pytest.mark.parametrize("case", sorted(RIEMANN_DATA))
def test_riemann_data_reproduces_the_fan(case):
    um, up, thm, thp = RIEMANN_DATA[case]
    fan = solve_riemann(P, um, up, thm, thp)
    assert fan.case == case
    tl = solve(CauchyProblem.riemann(P, um, up, thm, thp, horizon=1.0))
    exact = FanSolution(fan, 0.0, 0.0, 1.0)
    x = np.linspace(-4.0, 4.0, 801)
    # stay off the waves themselves, where a rounding-level shift flips the limit
    edges = np.array([e for w in fan.waves for e in (w.xi_lo, w.xi_hi)])
    if edges.size:
        x = x[np.min(np.abs(x[:, None] - edges[None, :]), axis=1) > 1e-6]
    assert np.max(np.abs(tl.query(1.0, x) - exact.query(1.0, x))) < 1e-9
    assert np.array_equal(tl.theta(1.0, x), exact.theta(1.0, x))
    assert tl.interface_count(1.0) == fan.interface_count


def test_constant_data_has_no_interfaces():
    u = PiecewiseMonotoneProfile.constant(0.3)
    tl = solve(CauchyProblem(P, u, ThetaField.constant(0), horizon=1.0))
    assert tl.interface_count(1.0) == 0
    assert np.all(tl.query(1.0, np.linspace(-3, 3, 7)) == 0.3)


def collision():
    u = PiecewiseMonotoneProfile((Segment.constant(-1.0, 1.0, 0.0),), 2.0, -2.0)
    return solve(CauchyProblem(P, u, ThetaField(1, (-1.0, 1.0)), horizon=1.0))


def test_collision_restarts_with_fewer_interfaces():
    tl = collision()
    assert tl.restart_log
    for r in tl.restart_log:
        assert r["count_after"] < r["count_before"]
        assert 0.0 < r["t"] < 1.0
    assert tl.interface_count(0.0) == 2
    assert tl.interface_count(1.0) < 2
    assert len(tl.epochs) == len(tl.restart_log) + 1


def test_collision_time_matches_two_shock_speeds():
    # the theta=0 middle region meets f-shocks moving with the golden speeds from both sides
    tl = collision()
    t_hit = tl.restart_log[0]["t"]
    fan_l = solve_riemann(P, 2.0, 0.0, 1, 0)
    fan_r = solve_riemann(P, 0.0, -2.0, 0, 1)
    sl = fan_l.waves[0].speed
    sr = [w for w in fan_r.waves if w.is_interface][0].speed
    assert t_hit == pytest.approx(2.0 / (sl - sr), rel=1e-9)


def test_incompatible_interfaces_rejected():
    u = PiecewiseMonotoneProfile.constant(0.0)
    with pytest.raises(Incompatible):
        CauchyProblem(P, u, ThetaField(0, (0.0,)), interfaces=InterfaceSet((0.5,), (0, 1)))


def _staircase(v, x0=0.0):
    return StaircaseEvolution.from_nodes(P.g, 0.0, np.array([x0]), np.array([v]))


def test_normalize_merges_admissible_g_jump():
    left, right = _staircase(0.5), _staircase(-0.5)
    log = []
    st = normalize(P, State(0.0, [0.0], [Region(0, left), Region(0, right)]), log)
    assert st.positions == [] and len(st.regions) == 1
    assert log[0]["event"] == "merge"


def test_normalize_seeds_upward_g_jump():
    left, right = _staircase(-0.5), _staircase(0.5)
    log = []
    st = normalize(P, State(0.0, [0.0], [Region(0, left), Region(0, right)]), log)
    assert st.positions == [0.0, 0.0]
    assert [r.theta for r in st.regions] == [0, 1, 0] and st.regions[1].seed
    assert log[0]["event"] == "seed"


def test_normalize_drops_inert_zero_width_region():
    # lower tangency of 2 lies right of the upper tangency of -2, so the seed cannot open
    left, right = _staircase(2.0), _staircase(-2.0)
    mid = Region(1, IncreasingEvolution.fan(P.f, 0.0, 0.0), seed=True)
    st = normalize(P, State(0.0, [0.0, 0.0], [Region(0, left), mid, Region(0, right)]))
    assert st.positions == []
    mid = Region(1, IncreasingEvolution.fan(P.f, 0.0, 0.0), seed=True)
    st = normalize(P, State(0.0, [0.0, 0.0], [Region(0, _staircase(0.5)), mid, Region(0, _staircase(-0.5))]))
    assert st.positions == [0.0, 0.0]


def test_interface_problems_follow_normalized_state():
    prs = interface_problems(CauchyProblem.riemann(P, -0.5, 0.5, 0, 0))
    assert len(prs) == 2
    # the seed opens along the lower and upper tangency states of the outer traces
    assert prs[0].predicted_speed == pytest.approx(-0.5 - ROOT2, abs=1e-12)
    assert prs[1].predicted_speed == pytest.approx(0.5 + ROOT2, abs=1e-12)
    assert len(interface_problems(CauchyProblem.riemann(P, 2.0, 0.0, 1, 0))) == 1


@pytest.mark.parametrize("case", ["1", "2", "3", "4A", "4B"])
def test_localize_case_tags(case):
    data = {"1": (1.0, -1.0, 1, 1), "2": (0.0, 0.0, 1, 0), "3": (0.0, 0.5, 0, 1),
            "4A": (0.5, -0.5, 0, 0), "4B": (-0.5, 0.5, 0, 0)}[case]
    u = PiecewiseMonotoneProfile.riemann(0.0, data[0], data[1])
    faces = InterfaceSet((0.0,), (data[2], data[3]))
    theta = ThetaField(data[2], (0.0,) if data[2] != data[3] else ())
    if case in ("1", "4B"):
        # equal-theta junctions are not minimal, so build the problem without validation
        pr = CauchyProblem.__new__(CauchyProblem)
        pr.pair, pr.u, pr.interfaces, pr.t0, pr.n_steps = P, u, faces, 0.0, 256
    else:
        pr = CauchyProblem(P, u, theta, interfaces=faces)
    loc = localize(pr, 0)
    assert loc.case == case
    assert (loc.u_left, loc.u_right) == (data[0], data[1])
    assert loc.interface_odes == {"1": 1, "2": 1, "3": 1, "4A": 0, "4B": 2}[case]
    with pytest.raises(IndexError):
        localize(pr, 1)


def decreasing_base():
    u = PiecewiseMonotoneProfile(
        (Segment.affine(-2.0, -0.5, 0.5, 0.0), Segment.constant(-0.5, 0.5, 0.0),
         Segment.affine(0.5, 2.0, 0.0, -0.5)),
    )
    return solve(CauchyProblem(P, u, ThetaField.constant(0), horizon=0.6))


def test_pair_spike_opens_at_tangency_speeds():
    tl = solve(inject_spike(decreasing_base(), 0.1, 0.0, kind="pair"))
    ep = tl.epochs[0]
    assert len(ep.trajectories) == 2
    speeds = [tr.speed(0.1 + 1e-7) for tr in ep.trajectories]
    assert speeds == pytest.approx([-ROOT2, ROOT2], abs=1e-6)
    assert tl.theta(0.3, np.array([0.0]))[0] == 1


@pytest.mark.parametrize("kind,side", [("max", -1), ("min", 1)])
def test_one_sided_spikes_flip_the_plateau(kind, side):
    base = decreasing_base()
    pr = inject_spike(base, 0.1, 0.0, kind=kind)
    st = pr.initial_state()
    assert [r.theta for r in st.regions].count(1) == 1
    tl = solve(pr)
    probe = np.array([0.25 * side])
    assert tl.theta(0.1, probe)[0] == 1
    assert tl.theta(0.1, -probe)[0] == 0


def test_spike_eligibility():
    base = decreasing_base()
    with pytest.raises(NotEligible):
        inject_spike(base, 0.7, 0.0)
    with pytest.raises(NotEligible):
        inject_spike(base, -0.1, 0.0)
    tl = collision()
    x = float(tl.interface_positions(0.1)[0])
    with pytest.raises(NotEligible):
        inject_spike(tl, 0.1, x)
    with pytest.raises(NotEligible):
        inject_spike(tl, 0.1, -3.0, kind="max")
    with pytest.raises(ValueError):
        inject_spike(base, 0.1, 0.0, kind="sideways")


def test_increasing_region_pair_spike_is_absorbed():
    u = PiecewiseMonotoneProfile((Segment.affine(-1.0, 1.0, -0.5, 0.5),), -0.5, 0.5)
    base = solve(CauchyProblem(P, u, ThetaField.constant(1), horizon=0.5))
    tl = solve(inject_spike(base, 0.1, 0.0))
    assert tl.interface_count(0.5) == 0
    x = np.linspace(-2, 2, 41)
    assert np.max(np.abs(tl.query(0.5, x) - base.query(0.5, x))) <= 1e-10
