"""Certification checks for Riemann fans and solution timelines.

Every check works on the timeline interface shared by :class:`FanSolution`
and :class:`SolutionTimeline`: ``query``/``theta`` with one-sided limits,
``breakpoints``, ``jumps``, ``edge_crossings``, ``interface_positions`` and
``epoch_bounds``.  Integrals are split at breakpoints so that quadrature
only ever sees smooth integrands.
"""
import json
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DegenerateJump
from .flux import JUMP_TOL
from .riemann import FanSolution, Jump, RAREFACTION

RH_TOL = 1e-8
LAX_TOL = 1e-8
WEAK_RATIO = 3.0
WEAK_FLOOR = 1e-10
TV_TOL = 1e-8
MASS_TOL = 1e-7
SAMPLES_PER_EPOCH = 64

_GX, _GW = legendre.leggauss(8)


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float = 0.0
    location: dict = field(default_factory=dict)
    tolerance: float = 0.0
    detail: str = ""

    def to_dict(self):
        return {
            "passed": bool(self.passed),
            "worst": _num(self.worst),
            "location": {k: _num(v) for k, v in self.location.items()},
            "tolerance": _num(self.tolerance),
            "detail": self.detail,
        }


def _num(v):
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    return v if np.isfinite(v) else str(v)


@dataclass
class ValidationReport:
    checks: dict = field(default_factory=dict)

    def add(self, result):
        self.checks[result.name] = result
        return result

    @property
    def ok(self):
        return all(c.passed for c in self.checks.values())

    def to_dict(self):
        return {"ok": self.ok, "checks": {k: v.to_dict() for k, v in self.checks.items()}}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary_lines(self):
        return [
            f"{'PASS' if c.passed else 'FAIL'} {name}: worst={c.worst:.3e} tol={c.tolerance:.1e} {c.detail}".rstrip()
            for name, c in self.checks.items()
        ]


# --- jump conditions ------------------------------------------------------------


def _flux(pair, u, theta):
    return pair.by_theta(int(theta))(u)


def _char(pair, u, theta):
    return pair.by_theta(int(theta)).deriv(u)


def check_rh(pair, u_left, theta_left, u_right, theta_right, speed):
    """``|speed * (u+ - u-) - (F+ - F-)|`` for the theta-selected fluxes."""
    du = u_right - u_left
    if abs(du) <= JUMP_TOL * (1.0 + abs(u_left) + abs(u_right)):
        raise DegenerateJump("no jump to check")
    dF = _flux(pair, u_right, theta_right) - _flux(pair, u_left, theta_left)
    return float(abs(speed * du - dF))


def rh_scale(pair, u_left, theta_left, u_right, theta_right, speed):
    dF = _flux(pair, u_right, theta_right) - _flux(pair, u_left, theta_left)
    return 1.0 + abs(float(dF)) + abs(speed * (u_right - u_left))


def check_lax(pair, u_left, theta_left, u_right, theta_right, speed):
    """Slack of the Lax inequalities (negative when violated)."""
    if abs(u_right - u_left) <= JUMP_TOL * (1.0 + abs(u_left) + abs(u_right)):
        raise DegenerateJump("no jump to check")
    left = float(_char(pair, u_left, theta_left))
    right = float(_char(pair, u_right, theta_right))
    return min(left - speed, speed - right)


def check_fan(fan):
    """RH, Lax and interface-definition checks for every shock of a fan."""
    report = ValidationReport()
    pair = fan.pair
    worst_rh, worst_lax = 0.0, np.inf
    loc_rh, loc_lax = {}, {}
    for k, w in enumerate(fan.waves):
        if w.kind == RAREFACTION:
            continue
        r = check_rh(pair, w.u_left, w.theta_left, w.u_right, w.theta_right, w.speed)
        r /= rh_scale(pair, w.u_left, w.theta_left, w.u_right, w.theta_right, w.speed)
        if r >= worst_rh:
            worst_rh, loc_rh = r, {"wave": k}
        s = check_lax(pair, w.u_left, w.theta_left, w.u_right, w.theta_right, w.speed)
        if s <= worst_lax:
            worst_lax, loc_lax = s, {"wave": k}
    report.add(CheckResult("rh", worst_rh <= RH_TOL, worst_rh, loc_rh, RH_TOL))
    worst_lax = 0.0 if worst_lax == np.inf else worst_lax
    report.add(CheckResult("lax", worst_lax >= -LAX_TOL, worst_lax, loc_lax, LAX_TOL))
    slopes = [(w.xi_lo, w.xi_hi) for w in fan.waves]
    ordered = all(a <= b for a, b in slopes) and all(
        slopes[i][1] <= slopes[i + 1][0] for i in range(len(slopes) - 1)
    )
    states = [fan.u_minus] + [v for w in fan.waves for v in (w.u_left, w.u_right)] + [fan.u_plus]
    matched = all(abs(states[2 * i + 1] - states[2 * i]) <= 1e-12 * (1 + abs(states[2 * i]))
                  for i in range(len(fan.waves) + 1))
    iface_ok = all(
        w.is_interface == (w.theta_left != w.theta_right or (w.theta_left == 1 and w.u_left > w.u_right))
        for w in fan.waves if w.kind != RAREFACTION
    )
    report.add(CheckResult("structure", ordered and matched and iface_ok,
                           detail="" if ordered and matched and iface_ok else "sector ordering/state matching"))
    return report


# --- sampling helpers -----------------------------------------------------------


def sample_times(timeline, per_epoch=SAMPLES_PER_EPOCH, t_min=None):
    out = []
    for a, b in timeline.epoch_bounds:
        lo = a if t_min is None else max(a, t_min)
        if b <= lo:
            continue
        out.extend(lo + (b - lo) * (np.arange(per_epoch) + 0.5) / per_epoch)
    return np.array(out)


def _window(timeline, t, margin=1.0):
    bp = timeline.breakpoints(t)
    if bp.size == 0:
        return -margin, margin
    return float(bp[0]) - margin, float(bp[-1]) + margin


def _x_integral(timeline, t, a, b, fn):
    """``int_a^b fn(x, u, theta) dx`` with Gauss panels between breakpoints."""
    bp = timeline.breakpoints(t)
    cuts = np.unique(np.concatenate([[a, b], bp[(bp > a) & (bp < b)]]))
    lo, hi = cuts[:-1], cuts[1:]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    xs = (mid[:, None] + half[:, None] * _GX[None, :]).ravel()
    w = (half[:, None] * _GW[None, :]).ravel()
    u = timeline.query(t, xs)
    th = timeline.theta(t, xs)
    return float(np.sum(w * fn(xs, u, th)))


def mixed_flux(pair, u, theta):
    return np.where(np.asarray(theta) == 1, pair.f(u), pair.g(u))


# --- timeline checks --------------------------------------------------------------


def check_jumps(timeline, times=None):
    """RH, Lax and interface-set checks at every jump of the sampled times."""
    pair = timeline.pair
    times = sample_times(timeline) if times is None else times
    worst_rh, worst_lax = 0.0, np.inf
    loc_rh, loc_lax, loc_if = {}, {}, {}
    iface_ok = True
    for t in times:
        ifaces = np.asarray(timeline.interface_positions(t), dtype=float)
        for j in timeline.jumps(t):
            if not np.isfinite(j.speed):
                continue
            r = check_rh(pair, j.u_left, j.theta_left, j.u_right, j.theta_right, j.speed)
            r /= rh_scale(pair, j.u_left, j.theta_left, j.u_right, j.theta_right, j.speed)
            if r >= worst_rh:
                worst_rh, loc_rh = r, {"t": t, "x": j.x}
            s = check_lax(pair, j.u_left, j.theta_left, j.u_right, j.theta_right, j.speed)
            if s <= worst_lax:
                worst_lax, loc_lax = s, {"t": t, "x": j.x}
            must = j.theta_left != j.theta_right or (j.theta_left == 1 and j.u_left > j.u_right)
            near = ifaces.size and np.min(np.abs(ifaces - j.x)) <= 1e-9 * (1 + abs(j.x))
            if must and not near:
                iface_ok, loc_if = False, {"t": t, "x": j.x}
    worst_lax = 0.0 if worst_lax == np.inf else worst_lax
    return [
        CheckResult("rh", worst_rh <= RH_TOL, worst_rh, loc_rh, RH_TOL),
        CheckResult("lax", worst_lax >= -LAX_TOL, worst_lax, loc_lax, LAX_TOL),
        CheckResult("interfaces", iface_ok, 0.0, loc_if, 0.0,
                    "" if iface_ok else "jump requiring an interface is not one"),
    ]


def check_theta_sign(timeline, times=None, slope_tol=1e-6):
    """theta = 1 where ``u_x > 0`` and 0 where ``u_x < 0`` at smooth sample points."""
    times = sample_times(timeline, 16) if times is None else times
    bad = None
    checked = 0
    for t in times:
        bp = timeline.breakpoints(t)
        if bp.size < 2:
            continue
        lo, hi = bp[:-1], bp[1:]
        keep = hi - lo > 1e-9 * (1 + np.abs(lo))
        lo, hi = lo[keep], hi[keep]
        for frac in (0.25, 0.5, 0.75):
            x = lo + frac * (hi - lo)
            h = 1e-3 * (hi - lo)
            ux = (timeline.query(t, x + h) - timeline.query(t, x - h)) / (2 * h)
            th = timeline.theta(t, x)
            steep = np.abs(ux) > slope_tol
            checked += int(np.count_nonzero(steep))
            wrong = steep & (th != (ux > 0).astype(int))
            if np.any(wrong):
                i = int(np.argmax(wrong))
                bad = {"t": t, "x": float(x[i])}
    return CheckResult("theta_sign", bad is None, 0.0, bad or {}, slope_tol, f"{checked} smooth points")


def bump_battery(timeline, n=10, seed=0, x_range=None):
    """Seeded tensor bumps ``b((t-tc)/wt) b((x-xc)/wx)`` with ``b(r) = (1-r^2)^4``."""
    rng = np.random.default_rng(seed)
    t0, T = timeline.t_start, timeline.horizon
    if x_range is None:
        a1, b1 = _window(timeline, T)
        a0, b0 = _window(timeline, t0 + 1e-3 * (T - t0))
        x_range = (min(a0, a1), max(b0, b1))
    xa, xb = x_range
    out = []
    for _ in range(n):
        wt = rng.uniform(0.15, 0.45) * (T - t0)
        tc = rng.uniform(t0 + wt, T - wt)
        wx = rng.uniform(0.15, 0.4) * (xb - xa)
        xc = rng.uniform(xa + 0.5 * wx, xb - 0.5 * wx)
        out.append((tc, wt, xc, wx))
    return out


def _bump(r):
    m = np.abs(r) < 1
    q = np.where(m, 1 - r * r, 0.0)
    return q**4, np.where(m, -8 * r * q**3, 0.0)


def weak_residual(timeline, bump, level=0, base=24):
    """``int int u phi_t + F phi_x`` by composite midpoint in t, exact panels in x."""
    pair = timeline.pair
    tc, wt, xc, wx = bump
    n = base * 2**level
    lo, hi = tc - wt, tc + wt
    # restarts put kinks in the x-integral, so panels must not straddle them
    cuts = [lo] + [e for a, b in timeline.epoch_bounds for e in (a, b) if lo < e < hi] + [hi]
    cuts = np.unique(cuts)
    ts, ws = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        # same count per piece: each piece error then scales by exactly 4 per level
        m = n
        ts.extend(a + (np.arange(m) + 0.5) * (b - a) / m)
        ws.extend([(b - a) / m] * m)
    total = 0.0
    for t, dt in zip(ts, ws):
        bt, dbt = _bump((t - tc) / wt)

        def integrand(x, u, th, bt=bt, dbt=dbt):
            bx, dbx = _bump((x - xc) / wx)
            return u * (dbt / wt) * bx + mixed_flux(pair, u, th) * bt * (dbx / wx)

        total += dt * _x_integral(timeline, t, xc - wx, xc + wx, integrand)
    return total


def check_weak_form(timeline, n=10, seed=0, levels=(0, 1), x_range=None):
    """Each residual must shrink by ``WEAK_RATIO`` under refinement or sit at the floor."""
    battery = bump_battery(timeline, n, seed, x_range)
    rows = []
    worst_ratio = np.inf
    ok = True
    loc = {}
    for k, b in enumerate(battery):
        coarse = abs(weak_residual(timeline, b, levels[0]))
        fine = abs(weak_residual(timeline, b, levels[1]))
        ratio = coarse / fine if fine > 0 else np.inf
        passed = fine <= WEAK_FLOOR or ratio >= WEAK_RATIO
        rows.append((coarse, fine, ratio))
        if not passed:
            ok = False
            loc = {"function": k}
        if fine > WEAK_FLOOR:
            worst_ratio = min(worst_ratio, ratio)
    res = CheckResult("weak_form", ok, worst_ratio if np.isfinite(worst_ratio) else 0.0, loc, WEAK_RATIO,
                      f"max fine residual {max(r[1] for r in rows):.2e}")
    res.rows = rows
    return res


def total_variation(timeline, t):
    """Exact total variation at time ``t`` from the breakpoint structure."""
    bp = timeline.breakpoints(t)
    if bp.size == 0:
        return 0.0
    right = timeline.query(t, bp, "+")
    left = timeline.query(t, bp, "-")
    tv = float(np.sum(np.abs(right - left)))
    tv += float(np.sum(np.abs(left[1:] - right[:-1])))
    return tv


def check_tv(timeline, times=None, t_min=0.01):
    times = sample_times(timeline, 16, t_min) if times is None else times
    worst = 0.0
    loc = {}
    for a, b in timeline.epoch_bounds:
        ts = [t for t in times if a < t < b]
        tvs = [total_variation(timeline, t) for t in ts]
        for i in range(1, len(tvs)):
            inc = tvs[i] - tvs[i - 1]
            if inc > worst:
                worst, loc = inc, {"t": ts[i]}
    return CheckResult("tv", worst <= TV_TOL, worst, loc, TV_TOL)


def mass_balance(timeline, a, b, t1, t2):
    """Conservation defect over the box ``[a, b] x [t1, t2]``."""
    pair = timeline.pair
    ident = lambda x, u, th: u
    dm = _x_integral(timeline, t2, a, b, ident) - _x_integral(timeline, t1, a, b, ident)
    flux_in = 0.0
    for x, sign in ((b, 1.0), (a, -1.0)):
        cuts = np.unique(np.concatenate([[t1, t2], timeline.edge_crossings(x, t1, t2)]))
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            F = lambda s: float(mixed_flux(pair, timeline.query(s, x), timeline.theta(s, x)))
            val, _ = quad(F, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)
            flux_in += sign * val
    return dm + flux_in


def check_mass(timeline, n_boxes=20, seed=0, x_range=None):
    rng = np.random.default_rng(seed)
    t0, T = timeline.t_start, timeline.horizon
    if x_range is None:
        x_range = _window(timeline, T)
    xa, xb = x_range
    worst, loc = 0.0, {}
    for _ in range(n_boxes):
        a, b = np.sort(rng.uniform(xa, xb, 2))
        t1, t2 = np.sort(rng.uniform(t0 + 1e-3 * (T - t0), T, 2))
        r = abs(mass_balance(timeline, a, b, t1, t2)) / (b - a + t2 - t1)
        if r > worst:
            worst, loc = r, {"t1": t1, "t2": t2, "a": a, "b": b}
    return CheckResult("mass", worst <= MASS_TOL, worst, loc, MASS_TOL)


def check_selfsimilar(solution, t=1.0, xs=None, scales=(0.5, 2.0, 10.0), x0=0.0, t0=0.0, tol=1e-10):
    """``u(t0 + s (t - t0), x0 + s (x - x0)) == u(t, x)`` for Riemann solutions."""
    xs = np.linspace(-3, 3, 241) if xs is None else np.asarray(xs)
    base = solution.query(t0 + t, x0 + xs)
    worst, loc = 0.0, {}
    for s in scales:
        v = solution.query(t0 + s * t, x0 + s * xs)
        # a sample sitting on a jump may land on either side by roundoff
        near = np.zeros(xs.shape, dtype=bool)
        for tt, scale in ((t0 + t, 1.0), (t0 + s * t, s)):
            for j in solution.jumps(tt):
                near |= np.abs(x0 + scale * xs - j.x) <= 1e-8 * (1.0 + abs(j.x))
        d = np.where(near, 0.0, np.abs(v - base))
        i = int(np.argmax(d))
        if d[i] > worst:
            worst, loc = float(d[i]), {"scale": s, "x": float(xs[i])}
    return CheckResult("selfsimilar", worst <= tol, worst, loc, tol)


def check_interface_count(timeline):
    ok = True
    loc = {}
    for r in timeline.restart_log:
        if not r["count_after"] < r["count_before"]:
            ok, loc = False, {"t": r["t"]}
    return CheckResult("interface_count", ok, 0.0, loc, 0.0)


def validate_timeline(timeline, seed=0, weak=True, mass=True):
    report = ValidationReport()
    for r in check_jumps(timeline):
        report.add(r)
    report.add(check_theta_sign(timeline))
    report.add(check_tv(timeline))
    if hasattr(timeline, "restart_log"):
        report.add(check_interface_count(timeline))
    if weak:
        report.add(check_weak_form(timeline, seed=seed))
    if mass:
        report.add(check_mass(timeline, seed=seed))
    return report


# --- L1 distances -------------------------------------------------------------------


def l1_distance(sol1, sol2, t, a=None, b=None):
    """``int |u1(t) - u2(t)| dx`` over ``[a, b]`` (default: hull of breakpoints).

    Panels are cut at both solutions' breakpoints and at sign changes of
    the difference, so Gauss quadrature integrates smooth pieces only.
    """
    bp = np.unique(np.concatenate([sol1.breakpoints(t), sol2.breakpoints(t)]))
    if a is None or b is None:
        lo, hi = (bp[0] - 1.0, bp[-1] + 1.0) if bp.size else (-1.0, 1.0)
        far = np.array([lo - 1e3, hi + 1e3])
        if np.any(np.abs(sol1.query(t, far) - sol2.query(t, far)) > 0):
            return np.inf
        a = lo if a is None else a
        b = hi if b is None else b
    cuts = np.unique(np.concatenate([[a, b], bp[(bp > a) & (bp < b)]]))
    diff = lambda x: sol1.query(t, x) - sol2.query(t, x)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        probe = np.linspace(lo, hi, 17)[1:-1]
        d = diff(probe)
        pts = [lo]
        for j in np.nonzero(d[:-1] * d[1:] < 0)[0]:
            pts.append(brentq(lambda s: float(diff(np.array([s]))[0]), probe[j], probe[j + 1], xtol=1e-15))
        pts.append(hi)
        for p, q in zip(pts[:-1], pts[1:]):
            mid, half = 0.5 * (p + q), 0.5 * (q - p)
            x = mid + half * _GX
            total += half * float(np.sum(_GW * np.abs(diff(x))))
    return total


__all__ = [
    "CheckResult",
    "FanSolution",
    "Jump",
    "ValidationReport",
    "check_fan",
    "check_jumps",
    "check_lax",
    "check_mass",
    "check_rh",
    "check_selfsimilar",
    "check_theta_sign",
    "check_tv",
    "check_weak_form",
    "l1_distance",
    "mass_balance",
    "total_variation",
    "validate_timeline",
    "weak_residual",
]
