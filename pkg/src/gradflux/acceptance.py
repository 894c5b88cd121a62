"""The acceptance battery, runnable from the CLI (``selftest``) and from pytest."""
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .cauchy import CauchyProblem, inject_spike, solve
from .evolution import make_flat, make_g_left, make_sharp_f, make_sharp_g
from .flux import FluxPair, tangent_lower, tangent_upper
from .interface_ode import (
    InterfaceProblem, Trajectory, default_grid, measure_contraction, picard_solve,
    step_integrate, weighted_distance,
)
from .profile import PiecewiseMonotoneProfile, Segment, ThetaField
from .riemann import enumerate_admissible_alternatives, solve_riemann
from .validate import (
    check_fan, check_interface_count, check_jumps, check_mass, check_theta_sign, check_tv,
    check_weak_form, l1_distance,
)

ROOT2 = np.sqrt(2.0)


@dataclass
class Outcome:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.number:2d} {self.title}: {self.detail}"


def _pair():
    return FluxPair.quadratic(1.0)


def _riemann_timeline(um, up, thm, thp, horizon=1.0, x0=0.0):
    return solve(CauchyProblem.riemann(_pair(), um, up, thm, thp, x0=x0, horizon=horizon))


def _zero_timeline(horizon=1.0):
    return solve(CauchyProblem(_pair(), PiecewiseMonotoneProfile.constant(0.0),
                               ThetaField.constant(0), horizon=horizon))


def golden_speeds():
    P = _pair()
    errs = []
    fan = solve_riemann(P, 2.0, 0.0, 1, 0)
    errs.append(abs(fan.waves[0].speed - 1.5))
    errs.append(abs(fan.waves[0].speed - (2.0 / 2 + 1 / 2.0)))
    fan = solve_riemann(P, 0.0, 0.0, 1, 0)
    errs.append(abs(fan.shocks[0].speed - ROOT2))
    ok = fan.case == "2B" and solve_riemann(P, 2.0, 0.0, 1, 0).case == "2A"
    for um, lam in ((2.0, 1.5), (0.0, ROOT2)):
        tl = _riemann_timeline(um, 0.0, 1, 0)
        errs.append(abs(float(tl.interface_positions(1.0)[-1]) - lam))
    worst = max(errs)
    return ok and worst <= 1e-12, f"max error {worst:.2e} (tol 1e-12)"


def _bisect_tangency(pair, anchor, upper):
    # the chord from (anchor, g(anchor)) touches f where f(w) - g(a) = f'(w)(w - a)
    r = lambda w: float(pair.f(w) - pair.g(anchor) - pair.f.deriv(w) * (w - anchor))
    lo, hi = (anchor, anchor + 1.0) if upper else (anchor - 1.0, anchor)
    while r(hi if upper else lo) > 0:
        if upper:
            hi = anchor + 2 * (hi - anchor)
        else:
            lo = anchor - 2 * (anchor - lo)
    w = brentq(r, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return w


def tangency():
    worst = abs(tangent_upper(_pair(), 0.0) - ROOT2)
    for c in (0.5, 1.0, 2.0):
        P = FluxPair.quadratic(c)
        for a in np.arange(-2.0, 2.5, 0.5):
            us, vs = tangent_upper(P, a), tangent_lower(P, a)
            for got, closed, oracle in (
                (us, a + np.sqrt(2 * c), _bisect_tangency(P, a, True)),
                (vs, a - np.sqrt(2 * c), _bisect_tangency(P, a, False)),
            ):
                worst = max(worst, abs(got - closed), abs(got - oracle))
    return worst <= 1e-10, f"max error {worst:.2e} (tol 1e-10)"


def _ramp(x, t, x0, mirrored=False):
    """Closed-form solution of the two-ramp data (right limits)."""
    s = ROOT2 * t
    if mirrored:
        inside = (x >= x0 - s) & (x < x0)
        return np.where(inside, (x - x0) / t, 0.0), np.where(x < x0 - s, 0, 1)
    inside = (x >= x0) & (x < x0 + s)
    return np.where(inside, (x - x0) / t, 0.0), np.where(x < x0 + s, 1, 0)


def example_ramps():
    x0 = 0.25
    tl = _riemann_timeline(0.0, 0.0, 1, 0, horizon=2.0, x0=x0)
    mirror = solve(inject_spike(_zero_timeline(2.0), 0.0, x0, kind="min"))
    worst_u, bad_theta = 0.0, 0
    for t in (0.5, 1.0, 2.0):
        xs = np.linspace(x0 - 2.0 * t - 0.5, x0 + 2.0 * t + 0.5, 1000)
        for timeline, mirrored in ((tl, False), (mirror, True)):
            u_ref, th_ref = _ramp(xs, t, x0, mirrored)
            worst_u = max(worst_u, float(np.max(np.abs(timeline.query(t, xs) - u_ref))))
            bad_theta += int(np.sum(timeline.theta(t, xs) != th_ref))
    ok = worst_u <= 1e-10 and bad_theta == 0
    return ok, f"max |u - ramp| {worst_u:.2e} (tol 1e-10), theta mismatches {bad_theta}"


def nonuniqueness():
    d = 0.3
    base = _zero_timeline(1.0)
    tls = [solve(inject_spike(base, 0.0, x, kind="max")) for x in (0.0, d)]
    checks = []
    for tl in tls:
        rh, lax, _ = check_jumps(tl)
        checks += [rh, lax, check_weak_form(tl)]
    dist = l1_distance(tls[0], tls[1], 1.0)
    exact = 2 * ROOT2 * d - d * d
    err = abs(dist - exact)
    ok = all(c.passed for c in checks) and err <= 1e-8
    failed = [c.name for c in checks if not c.passed]
    return ok, f"L1 {dist:.15f} vs {exact:.15f} (err {err:.1e}), failed checks {failed}"


def twins():
    P = _pair()
    fans = enumerate_admissible_alternatives(P, 0.5, -0.5, 0, 0)
    valid = [check_fan(F).ok for F in fans]
    first = solve_riemann(P, 0.5, -0.5, 0, 0)
    ok = len(fans) == 2 and all(valid) and first.interface_count == 0
    return ok, f"{len(fans)} fans, valid {valid}, selected interface count {first.interface_count}"


def _ode_scenarios():
    P = _pair()
    const = PiecewiseMonotoneProfile.constant
    stair = PiecewiseMonotoneProfile(
        (Segment.constant(0, 0.3, 0.0), Segment.constant(0.3, 0.6, -0.1), Segment.constant(0.6, 0.9, -0.2)),
        0.0, -0.3,
    )
    stair_left = PiecewiseMonotoneProfile(
        (Segment.constant(-0.9, -0.6, 0.3), Segment.constant(-0.6, -0.3, 0.2), Segment.constant(-0.3, 0.0, 0.1)),
        0.4, 0.0,
    )
    ramp_left = PiecewiseMonotoneProfile((Segment.affine(-1.0, 0.0, -0.5, 0.0),), -0.5, 0.0)
    ramp_right = PiecewiseMonotoneProfile((Segment.affine(0.0, 1.0, 0.0, 0.5),), 0.0, 0.5)
    slope = PiecewiseMonotoneProfile((Segment.affine(0.0, 1.0, 0.0, -0.6),), 0.0, -0.6)
    return {
        "2A flat": InterfaceProblem(P, make_flat(P.f, const(2.0)), make_sharp_g(P.g, const(0.0)), 1, 0, 0.0, 0.0),
        "2B flat": InterfaceProblem(P, make_flat(P.f, const(0.0)), make_sharp_g(P.g, const(0.0)), 1, 0, 0.0, 0.0),
        "2B staircase": InterfaceProblem(P, make_flat(P.f, const(0.0)), make_sharp_g(P.g, stair), 1, 0, 0.0, 0.0),
        "2B ramps": InterfaceProblem(P, make_flat(P.f, ramp_left), make_sharp_g(P.g, slope), 1, 0, 0.0, 0.0),
        "3B staircase": InterfaceProblem(P, make_g_left(P.g, stair_left), make_sharp_f(P.f, const(0.0)),
                                         0, 1, 0.0, 0.0),
        "3B ramp": InterfaceProblem(P, make_g_left(P.g, stair_left), make_sharp_f(P.f, ramp_right),
                                    0, 1, 0.0, 0.0),
    }


def ode_cross_validation():
    worst = 0.0
    for name, pr in _ode_scenarios().items():
        T = 0.5
        st = step_integrate(pr, T)
        pc = picard_solve(pr, T, tube=False)
        T = min(st.t_end, pc.t_end)
        worst = max(worst, weighted_distance(st, pc, default_grid(0.0, T)))
    pr = _ode_scenarios()["2B flat"]
    factors = []
    for t0 in (0.05, 0.02, 0.01):
        y = Trajectory.linear(0.0, 0.0, ROOT2, t0, pr)
        z = Trajectory.linear(0.0, 0.0, ROOT2 + 0.01, t0, pr)
        factors.append(measure_contraction(pr, y, z))
    ok = worst <= 1e-8 and max(factors) <= 0.5
    return ok, f"max weighted distance {worst:.2e} (tol 1e-8), contraction {max(factors):.3g} (<= 0.5)"


def subcase_continuity():
    P = _pair()
    u_star = tangent_upper(P, 0.0)
    eps = np.array([1e-2, 1e-3, 1e-4])
    gaps = np.array([abs(solve_riemann(P, u_star + e, 0.0, 1, 0).waves[0].speed - P.f.deriv(u_star))
                     for e in eps])
    order = float(np.polyfit(np.log(eps), np.log(gaps), 1)[0])
    C = float(np.max(gaps / eps**2))
    return order >= 1.9, f"fitted order {order:.3f} (>= 1.9), C = {C:.3g}"


def produced_timelines():
    """Every timeline the battery builds, keyed by description."""
    P = _pair()
    out = {
        "2A": _riemann_timeline(2.0, 0.0, 1, 0),
        "2B": _riemann_timeline(0.0, 0.0, 1, 0),
        "3B": _riemann_timeline(0.0, 0.5, 0, 1),
        "4B": _riemann_timeline(-0.5, 0.5, 0, 0),
        "collision": _collision_timeline(),
        "spike": _decreasing_spike()[1],
    }
    ramps = PiecewiseMonotoneProfile(
        (Segment.affine(-1.0, 0.0, 0.0, 1.0), Segment.affine(0.0, 1.0, 1.0, -0.5)), 0.0, -0.5
    )
    out["ramps"] = solve(CauchyProblem(P, ramps, ThetaField(1, (0.0,)), horizon=0.5))
    return out


def weak_form_suite(timelines=None):
    timelines = produced_timelines() if timelines is None else timelines
    failed = []
    worst_ratio, worst_lax = np.inf, np.inf
    for name, tl in timelines.items():
        _, lax, _ = check_jumps(tl)
        weak = check_weak_form(tl)
        theta = check_theta_sign(tl)
        worst_ratio = min(worst_ratio, weak.worst)
        worst_lax = min(worst_lax, lax.worst)
        failed += [f"{name}:{c.name}" for c in (lax, weak, theta) if not c.passed]
    ok = not failed
    return ok, f"{len(timelines)} timelines, min ratio {worst_ratio:.2f}, min Lax slack {worst_lax:.2e}, failed {failed}"


def _collision_timeline():
    P = _pair()
    u = PiecewiseMonotoneProfile((Segment.constant(-1.0, 1.0, 0.0),), 2.0, -2.0)
    return solve(CauchyProblem(P, u, ThetaField(1, (-1.0, 1.0)), horizon=1.0))


def _double_collision_timeline():
    P = _pair()
    u = PiecewiseMonotoneProfile(
        (Segment.constant(-2.0, -1.0, 0.0), Segment.constant(-1.0, 1.0, 2.0), Segment.constant(1.0, 2.0, 0.0)),
        2.0, -2.0,
    )
    return solve(CauchyProblem(P, u, ThetaField(1, (-2.0, -1.0, 1.0, 2.0)), horizon=2.0))


def structural():
    failed = []
    restarts = 0
    for name, tl in (("collision", _collision_timeline()), ("double", _double_collision_timeline())):
        restarts += len(tl.restart_log)
        for c in (check_interface_count(tl), check_tv(tl), check_mass(tl)):
            if not c.passed:
                failed.append(f"{name}:{c.name}")
    ok = not failed and restarts > 0
    return ok, f"{restarts} restarts checked, failed {failed}"


def _decreasing_spike(tau=0.1):
    P = _pair()
    u = PiecewiseMonotoneProfile(
        (Segment.affine(-2.0, -0.5, 0.5, 0.0), Segment.constant(-0.5, 0.5, 0.0), Segment.affine(0.5, 2.0, 0.0, -0.5)),
    )
    base = solve(CauchyProblem(P, u, ThetaField.constant(0), horizon=0.6))
    return base, solve(inject_spike(base, tau, 0.0, kind="pair"))


def spike_dynamics():
    P = _pair()
    tau = 0.1
    _, tl = _decreasing_spike(tau)
    ep = tl.epochs[0]
    h = 1e-7
    speeds = [tr.speed(tau + h) for tr in ep.trajectories]
    err = max(abs(speeds[0] + ROOT2), abs(speeds[1] - ROOT2))
    ts = np.linspace(tau + 0.01, tau + 0.2, 8)
    widths = np.array([np.diff(tl.interface_positions(t))[0] for t in ts])
    lin = float(np.max(np.abs(widths - 2 * ROOT2 * (ts - tau))))
    # increasing region: the spike pair annihilates on the spot
    ramp = PiecewiseMonotoneProfile((Segment.affine(-1.0, 1.0, -0.5, 0.5),))
    base = solve(CauchyProblem(P, ramp, ThetaField.constant(1), horizon=0.5))
    pert = solve(inject_spike(base, tau, 0.1, kind="pair"))
    xs = np.linspace(-2.0, 2.0, 801)
    back = max(float(np.max(np.abs(pert.query(t, xs) - base.query(t, xs)))) for t in (0.2, 0.5))
    count = pert.interface_count(tau + 1e-9)
    ok = err <= 1e-8 and speeds[0] < speeds[1] and lin <= 1e-8 and back <= 1e-10 and count == 0
    return ok, (f"speeds {speeds[0]:.12f}, {speeds[1]:.12f} (err {err:.1e}), width linearity {lin:.1e}, "
                f"increasing-region deviation {back:.1e}, interfaces after {count}")


CRITERIA = [
    (1, "golden shock speeds", golden_speeds),
    (2, "tangency states", tangency),
    (3, "two-ramp closed form", example_ramps),
    (4, "non-uniqueness exhibit", nonuniqueness),
    (5, "twin Riemann fans", twins),
    (6, "interface ODE cross-validation", ode_cross_validation),
    (7, "sub-case continuity", subcase_continuity),
    (8, "weak-form property suite", weak_form_suite),
    (9, "structural invariants", structural),
    (10, "spike dynamics", spike_dynamics),
]


def run_criterion(number):
    num, title, fn = CRITERIA[number - 1]
    t = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failure, reported like one
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return Outcome(num, title, bool(ok), detail, time.perf_counter() - t)


def run_all(echo=None):
    out = []
    for num, _, _ in CRITERIA:
        res = run_criterion(num)
        if echo is not None:
            echo(res.line())
        out.append(res)
    return out
