"""Global solver for piecewise monotone data with a flux selector field.

The line is cut by interfaces into regions.  Each region carries its flux
selector value and a single-flux background evolution of the region's data
(rarefying ``f``-evolution where theta = 1, front-tracked ``g``-staircase
where theta = 0) that is valid between the region's interfaces.  Every
interface depends only on its two neighbouring regions, so trajectories are
integrated independently; when two of them meet, the state is rebuilt from
the solution at that instant with as few new interfaces as possible.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateDenominator, GradFluxError, Incompatible, NotEligible, NoConvergence
from .evolution import N_STEPS, IncreasingEvolution, StaircaseEvolution
from .flux import tangent_lower, tangent_upper
from .interface_ode import InterfaceProblem, step_integrate
from .profile import (
    JUMP_REL_TOL,
    InterfaceSet,
    PiecewiseMonotoneProfile,
    ThetaField,
    minimal_interface_set,
    validate_compatibility,
)
from .riemann import Jump, solve_riemann

MAX_EPOCHS = 10_000
COLLISION_GROUP_TOL = 1e-10
COLLISION_SAMPLES = 4001


@dataclass
class Region:
    theta: int
    evo: object = None
    seed: bool = False


@dataclass
class State:
    """Interfaces and regions at one instant; ``regions[k]`` lies between
    ``positions[k-1]`` and ``positions[k]``."""

    t: float
    positions: list
    regions: list

    def edges(self, k):
        a = self.positions[k - 1] if k > 0 else -np.inf
        b = self.positions[k] if k < len(self.positions) else np.inf
        return a, b

    def limits(self, i):
        """Traces left/right of interface ``i`` from the adjacent regions."""
        y = np.array([self.positions[i]])
        ul = float(self.regions[i].evo.query(self.t, y, "-")[0])
        ur = float(self.regions[i + 1].evo.query(self.t, y, "+")[0])
        return ul, ur


class CauchyProblem:
    """Initial data ``(u, theta, interfaces)`` at ``t0`` and a horizon."""

    def __init__(self, pair, u, theta, interfaces=None, horizon=1.0, t0=0.0,
                 n_steps=N_STEPS, state=None, rtol=1e-12):
        self.pair = pair
        self.rtol = float(rtol)
        self.u = u
        self.theta = theta
        self.horizon = float(horizon)
        self.t0 = float(t0)
        self.n_steps = int(n_steps)
        self._state = state
        if state is None:
            if interfaces is None:
                interfaces = minimal_interface_set(u, theta)
            else:
                interfaces = interfaces.with_thetas(theta)
                report = validate_compatibility(u, theta, interfaces)
                if not report:
                    raise Incompatible(f"{report.reason} at x={report.location}")
            for x in (*u.breakpoints, *interfaces.positions):
                pair.check_domain(*u.limits(x))
            pair.check_domain(u.left_state, u.right_state)
        self.interfaces = interfaces
        if self.horizon <= self.t0:
            raise ValueError("horizon must exceed the initial time")

    @classmethod
    def riemann(cls, pair, u_minus, u_plus, theta_minus, theta_plus, x0=0.0, horizon=1.0, **kw):
        u = PiecewiseMonotoneProfile.riemann(x0, u_minus, u_plus)
        theta = ThetaField(int(theta_minus), (x0,) if theta_minus != theta_plus else ())
        faces = None
        if theta_minus == 0 and theta_plus == 0 and u_minus < u_plus:
            # an upward jump under g is only admissible through a theta=1 seed
            faces = InterfaceSet((x0, x0), (0, 1, 0))
        return cls(pair, u, theta, interfaces=faces, horizon=horizon, **kw)

    def initial_state(self):
        if self._state is not None:
            return State(self._state.t, list(self._state.positions), list(self._state.regions))
        pair = self.pair
        pos = list(self.interfaces.positions)
        regions = []
        for k, th in enumerate(self.interfaces.region_thetas):
            a = pos[k - 1] if k > 0 else -np.inf
            b = pos[k] if k < len(pos) else np.inf
            if a == b:
                evo = IncreasingEvolution.fan(pair.f, self.t0, a) if th == 1 else None
                regions.append(Region(th, evo, seed=(th == 1)))
                continue
            xs, us = self.u.restrict(a, b)
            if th == 1:
                evo = IncreasingEvolution.from_nodes(
                    pair.f, self.t0, xs, us, left_fan=np.isfinite(a), right_fan=np.isfinite(b)
                )
            else:
                evo = StaircaseEvolution.from_nodes(pair.g, self.t0, xs, us, self.n_steps)
            regions.append(Region(th, evo))
        return State(self.t0, pos, regions)


# --- normalization -----------------------------------------------------------


def _restrict(region, t, a, b):
    if region.evo is None or a == b:
        return Region(region.theta, None, region.seed)
    if region.theta == 1:
        evo = region.evo.restrict(t, a, b, left_fan=np.isfinite(a), right_fan=np.isfinite(b))
    else:
        evo = region.evo.restrict(t, a, b)
    return Region(region.theta, evo)


def _seed_opens(pair, ul, ur):
    return tangent_lower(pair, ul) < tangent_upper(pair, ur)


def normalize(pair, state, log=None):
    """Apply the minimal-interface rules until the state is stable.

    * a zero-width region is dropped unless it is an opening theta=1 seed
      between two theta=0 regions;
    * equal-theta junctions merge when the jump is admissible for the single
      flux (``u- >= u+`` for theta=0, ``u- <= u+`` for theta=1);
    * a theta=0 junction with ``u- < u+`` gets a new theta=1 seed.
    """
    t = state.t
    pos, regs = state.positions, state.regions
    log = [] if log is None else log
    changed = True
    while changed:
        changed = False
        for k in range(1, len(regs) - 1):
            if pos[k - 1] != pos[k]:
                continue
            r, L, R = regs[k], regs[k - 1], regs[k + 1]
            keep = False
            if r.theta == 1 and L.theta == 0 and R.theta == 0 and r.seed:
                st = State(t, pos, regs)
                ul = st.limits(k - 1)[0]
                ur = st.limits(k)[1]
                keep = _seed_opens(pair, ul, ur)
            if not keep:
                log.append({"event": "drop_zero_width", "t": t, "x": pos[k], "theta": r.theta})
                del regs[k]
                del pos[k]
                changed = True
                break
        if changed:
            continue
        for i in range(len(pos)):
            L, R = regs[i], regs[i + 1]
            if L.theta != R.theta or L.evo is None or R.evo is None:
                continue
            y = pos[i]
            ul, ur = State(t, pos, regs).limits(i)
            a = pos[i - 1] if i > 0 else -np.inf
            b = pos[i + 1] if i + 1 < len(pos) else np.inf
            tol = JUMP_REL_TOL * (1.0 + abs(ul) + abs(ur))
            if L.theta == 0 and ul >= ur - tol:
                evo = StaircaseEvolution.join(L.evo, R.evo, t, y, a, b)
                regs[i : i + 2] = [Region(0, evo)]
                del pos[i]
                log.append({"event": "merge", "t": t, "x": y, "theta": 0})
            elif L.theta == 0:
                regs.insert(i + 1, Region(1, IncreasingEvolution.fan(pair.f, t, y), seed=True))
                pos.insert(i, y)
                log.append({"event": "seed", "t": t, "x": y, "theta": 1})
            elif ul <= ur + tol:
                evo = IncreasingEvolution.join(L.evo, R.evo, t, y, a, b)
                regs[i : i + 2] = [Region(1, evo)]
                del pos[i]
                log.append({"event": "merge", "t": t, "x": y, "theta": 1})
            else:
                continue
            changed = True
            break
    return state


# --- epochs ------------------------------------------------------------------


def _interface_problem(pair, state, i):
    L, R = state.regions[i], state.regions[i + 1]
    y = state.positions[i]
    speed = None
    if R.seed and R.theta == 1 and state.positions[i + 1] == y:
        ul = state.limits(i)[0]
        speed = float(pair.f.deriv(tangent_lower(pair, ul)))
    elif L.seed and L.theta == 1 and i > 0 and state.positions[i - 1] == y:
        ur = state.limits(i)[1]
        speed = float(pair.f.deriv(tangent_upper(pair, ur)))
    return InterfaceProblem(pair, L.evo, R.evo, L.theta, R.theta, state.t, y,
                            predicted_speed=speed, tube_width=np.inf if speed is not None else None)


def interface_problems(problem):
    """The interface ODE problems of the normalized initial state."""
    state = normalize(problem.pair, problem.initial_state())
    return [_interface_problem(problem.pair, state, i) for i in range(len(state.positions))]


def _first_collision(y1, y2, t_lo, t_hi):
    """First time after ``t_lo`` at which ``y2 - y1`` reaches zero, else None."""
    if t_hi <= t_lo:
        return None
    knots = np.concatenate([y1.knots, y2.knots])
    ts = np.unique(np.concatenate([np.linspace(t_lo, t_hi, COLLISION_SAMPLES)[1:], knots]))
    ts = ts[(ts > t_lo) & (ts <= t_hi)]
    d = y2(ts) - y1(ts)
    bad = np.nonzero(d <= 0)[0]
    if bad.size == 0:
        return None
    j = int(bad[0])
    if j == 0:
        return float(ts[0])
    return brentq(lambda s: float(y2(s) - y1(s)), ts[j - 1], ts[j], xtol=1e-12, rtol=1e-15)


@dataclass
class Epoch:
    t_start: float
    t_end: float
    state: State
    trajectories: list = field(default_factory=list)

    def positions(self, t):
        t = float(t)
        if t <= self.t_start:
            return np.array(self.state.positions, dtype=float)
        return np.array([tr(t) for tr in self.trajectories], dtype=float)


class SolutionTimeline:
    """Queryable solution assembled from epochs between restarts."""

    def __init__(self, problem, epochs, restart_log, normalization_log):
        self.problem = problem
        self.pair = problem.pair
        self.epochs = epochs
        self.restart_log = restart_log
        self.normalization_log = normalization_log
        self.t_start = problem.t0
        self.horizon = problem.horizon
        self._starts = np.array([e.t_start for e in epochs])

    def epoch_at(self, t):
        k = int(np.searchsorted(self._starts, float(t), side="right") - 1)
        return self.epochs[max(k, 0)]

    def interface_positions(self, t):
        return self.epoch_at(t).positions(t)

    def interface_count(self, t):
        return len(self.epoch_at(t).trajectories)

    def _region_index(self, ys, x, side):
        if side == "+":
            return np.searchsorted(ys, x, side="right")
        return np.searchsorted(ys, x, side="left")

    def _at(self, t, x, side, what):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        t = float(t)
        if t == self.t_start and self.problem._state is None:
            if what == "u":
                out = self.problem.u.value(flat, side)
            else:
                out = self.problem.theta.value(flat, side)
            return np.asarray(out).reshape(x.shape)
        ep = self.epoch_at(t)
        ys = ep.positions(t)
        k = self._region_index(ys, flat, side)
        out = np.empty(flat.shape, dtype=float if what == "u" else int)
        for kk in np.unique(k):
            m = k == kk
            reg = ep.state.regions[kk]
            out[m] = reg.evo.query(t, flat[m], side) if what == "u" else reg.theta
        return out.reshape(x.shape)

    def query(self, t, x, side="+"):
        return self._at(t, x, side, "u")

    def theta(self, t, x, side="+"):
        return self._at(t, x, side, "theta")

    def _regions_with_bounds(self, t):
        ep = self.epoch_at(t)
        ys = ep.positions(t)
        edges = np.concatenate([[-np.inf], ys, [np.inf]])
        for k, reg in enumerate(ep.state.regions):
            yield reg, edges[k], edges[k + 1]

    def breakpoints(self, t):
        t = float(t)
        if t == self.t_start and self.problem._state is None:
            return np.unique(np.concatenate([self.problem.u.breakpoints, self.problem.theta.jumps]))
        pts = [self.interface_positions(t)]
        for reg, a, b in self._regions_with_bounds(t):
            if a < b:
                bp = reg.evo.breakpoints(t)
                pts.append(bp[(bp > a) & (bp < b)])
        return np.unique(np.concatenate(pts))

    @property
    def epoch_bounds(self):
        return [(ep.t_start, ep.t_end) for ep in self.epochs]

    def jumps(self, t):
        """Every discontinuity at time ``t`` as :class:`Jump` records.

        Interface speeds are central differences of the trajectory, so the
        jump conditions can be checked independently of the ODE right side.
        """
        t = float(t)
        ep = self.epoch_at(t)
        ys = ep.positions(t)
        out = []
        for i, tr in enumerate(ep.trajectories):
            y = float(ys[i])
            ul, ur = float(self.query(t, y, "-")), float(self.query(t, y, "+"))
            if abs(ul - ur) <= JUMP_REL_TOL * (1.0 + abs(ul) + abs(ur)):
                continue
            d = min(1e-6 * (1.0 + abs(t)), 0.5 * (t - ep.t_start), 0.5 * (ep.t_end - t))
            speed = (tr(t + d) - tr(t - d)) / (2 * d) if d > 0 else np.nan
            out.append(Jump(y, ul, ur, int(self.theta(t, y, "-")), int(self.theta(t, y, "+")), float(speed)))
        edges = np.concatenate([[-np.inf], ys, [np.inf]])
        for k, reg in enumerate(ep.state.regions):
            if reg.theta != 0 or not edges[k] < edges[k + 1]:
                continue
            pos, sp, vl, vr = reg.evo.shocks(t)
            m = (pos > edges[k]) & (pos < edges[k + 1])
            for x, s_, a, b in zip(pos[m], sp[m], vl[m], vr[m]):
                out.append(Jump(float(x), float(a), float(b), 0, 0, float(s_)))
        return sorted(out)

    def edge_crossings(self, x, t1, t2):
        """Times in ``(t1, t2)`` where a front or interface crosses the line ``x``."""
        out = []
        for e, ep in enumerate(self.epochs):
            lo, hi = max(ep.t_start, t1), min(ep.t_end, t2)
            if hi <= lo:
                continue
            if t1 < ep.t_start < t2:
                out.append(ep.t_start)
            for tr in ep.trajectories:
                s = np.linspace(lo, hi, 513)
                d = tr(s) - x
                for j in np.nonzero(d[:-1] * d[1:] < 0)[0]:
                    out.append(brentq(lambda u: tr(u) - x, s[j], s[j + 1], xtol=1e-14))
            for k, reg in enumerate(ep.state.regions):
                for fr in reg.evo.fronts(lo, hi):
                    if fr.speed == 0 or fr.t1 <= fr.t0:
                        continue
                    tc = fr.t0 + (x - fr.x0) / fr.speed
                    if fr.t0 < tc < fr.t1 and lo < tc < hi:
                        ys = ep.positions(tc)
                        a = ys[k - 1] if k > 0 else -np.inf
                        b = ys[k] if k < ys.size else np.inf
                        if a < x < b:
                            out.append(tc)
        return np.unique(np.array(out, dtype=float))

    def trajectory_rows(self):
        """``(epoch, interface, rows)`` with rows ``t, y, ydot, u_left, u_right``."""
        out = []
        for e, ep in enumerate(self.epochs):
            for i, tr in enumerate(ep.trajectories):
                out.append((e, i, tr.rows()))
        return out


def _integrate_epoch(pair, state, horizon, epoch_index, rtol=1e-12):
    trajs = []
    for i in range(len(state.positions)):
        prob = _interface_problem(pair, state, i)
        trajs.append(step_integrate(prob, horizon, rtol=rtol, partial=True))
    return trajs


def _raise_failure(tr, epoch_index, i):
    exc = tr.failure
    if isinstance(exc, DegenerateDenominator):
        exc.epoch = epoch_index
        exc.interface = i
    raise exc


def solve(problem):
    """Evolve the problem to its horizon, restarting at interface collisions."""
    pair = problem.pair
    T = problem.horizon
    norm_log = []
    state = normalize(pair, problem.initial_state(), norm_log)
    epochs = []
    restarts = []
    for epoch_index in range(MAX_EPOCHS):
        trajs = _integrate_epoch(pair, state, T, epoch_index, problem.rtol)
        n = len(trajs)
        t_ok = [tr.t_end for tr in trajs]
        hits = []
        for i in range(n - 1):
            tc = _first_collision(trajs[i], trajs[i + 1], state.t, min(t_ok[i], t_ok[i + 1]))
            if tc is not None:
                hits.append((tc, i))
        tau = min([h[0] for h in hits], default=T)
        tau = min(tau, T)
        for i, tr in enumerate(trajs):
            if tr.failure is not None and tr.t_end < tau:
                _raise_failure(tr, epoch_index, i)
        if tau >= T:
            epochs.append(Epoch(state.t, T, state, [tr.truncate(T) for tr in trajs]))
            return SolutionTimeline(problem, epochs, restarts, norm_log)
        trajs = [tr.truncate(tau) for tr in trajs]
        epochs.append(Epoch(state.t, tau, state, trajs))
        group_pairs = sorted(i for tc, i in hits if tc <= tau + COLLISION_GROUP_TOL)
        ys = [float(tr(tau)) for tr in trajs]
        members = set()
        for i in group_pairs:
            members.update((i, i + 1))
        # chains of adjacent colliding interfaces meet at a common point
        chains = []
        for i in sorted(members):
            if chains and chains[-1][-1] == i - 1 and (i - 1) in group_pairs:
                chains[-1].append(i)
            else:
                chains.append([i])
        for ch in chains:
            xc = float(np.mean([ys[i] for i in ch]))
            for i in ch:
                ys[i] = xc
        ys = list(np.maximum.accumulate(np.array(ys)))
        old = State(tau, ys, state.regions)
        regions = [_restrict(reg, tau, *old.edges(k)) for k, reg in enumerate(state.regions)]
        new_state = normalize(pair, State(tau, list(ys), regions), norm_log)
        restarts.append({
            "t": tau,
            "x": [float(ys[ch[0]]) for ch in chains],
            "merged": [list(ch) for ch in chains],
            "count_before": n,
            "count_after": len(new_state.positions),
        })
        state = new_state
    raise NoConvergence(f"more than {MAX_EPOCHS} epochs")


# --- local sub-problems and spikes -------------------------------------------


@dataclass
class LocalSubproblem:
    case: str
    theta_left: int
    theta_right: int
    u_left: float
    u_right: float
    left: object = None
    right: object = None
    natural: object = None

    @property
    def interface_odes(self):
        return {"1": 1, "2": 1, "3": 1, "4A": 0, "4B": 2}[self.case]


def localize(problem, interface_index):
    """One-sided backgrounds and case tag around interface ``interface_index``."""
    pos = problem.interfaces.positions
    if not 0 <= interface_index < len(pos):
        raise IndexError("interface index out of range")
    th = problem.interfaces.region_thetas
    y = pos[interface_index]
    thl, thr = th[interface_index], th[interface_index + 1]
    ul, ur = problem.u.limits(y)
    pair, t0 = problem.pair, problem.t0
    left_nodes = problem.u.restrict(-np.inf, y)
    right_nodes = problem.u.restrict(y, np.inf)
    inc = IncreasingEvolution.from_nodes
    stair = StaircaseEvolution.from_nodes
    if thl == 1 and thr == 1:
        return LocalSubproblem("1", 1, 1, ul, ur,
                               inc(pair.f, t0, *left_nodes, right_fan=True),
                               inc(pair.f, t0, *right_nodes, left_fan=True))
    if thl == 1:
        return LocalSubproblem("2", 1, 0, ul, ur,
                               inc(pair.f, t0, *left_nodes, right_fan=True),
                               stair(pair.g, t0, *right_nodes, problem.n_steps))
    if thr == 1:
        return LocalSubproblem("3", 0, 1, ul, ur,
                               stair(pair.g, t0, *left_nodes, problem.n_steps),
                               inc(pair.f, t0, *right_nodes, left_fan=True))
    if ul >= ur:
        return LocalSubproblem("4A", 0, 0, ul, ur)
    return LocalSubproblem("4B", 0, 0, ul, ur,
                           stair(pair.g, t0, *left_nodes, problem.n_steps),
                           stair(pair.g, t0, *right_nodes, problem.n_steps),
                           IncreasingEvolution.fan(pair.f, t0, y))


def _state_at(timeline, tau):
    ep = timeline.epoch_at(tau)
    ys = list(ep.positions(tau))
    st = State(tau, ys, ep.state.regions)
    regions = [_restrict(reg, tau, *st.edges(k)) for k, reg in enumerate(ep.state.regions)]
    return State(tau, ys, regions)


def inject_spike(timeline, tau, x_tilde, kind="pair", horizon=None):
    """Problem restarting at ``tau`` with a spike perturbation at ``x_tilde``.

    ``kind="pair"`` inserts a zero-width theta=1 seed (two interfaces at
    ``x_tilde`` opening along the tangency states).  ``"max"`` / ``"min"``
    switch theta to 1 on the constant stretch left / right of ``x_tilde``.
    """
    pair = timeline.pair
    tau, x = float(tau), float(x_tilde)
    if not timeline.t_start <= tau < timeline.horizon:
        raise NotEligible("tau outside the solved time range")
    state = _state_at(timeline, tau)
    ys = np.array(state.positions)
    if np.any(np.abs(ys - x) <= 1e-12 * (1.0 + abs(x))):
        raise NotEligible("x_tilde sits on an interface")
    k = int(np.searchsorted(ys, x))
    reg = state.regions[k]
    ul = float(reg.evo.query(tau, np.array([x]), "-")[0])
    ur = float(reg.evo.query(tau, np.array([x]), "+")[0])
    tol = JUMP_REL_TOL * (1.0 + abs(ul) + abs(ur))
    if reg.theta == 0:
        # staircase steps are a discretization, not genuine jumps
        lo, hi = reg.evo.value_range()
        tol = max(tol, 2.0 * (hi - lo) / timeline.problem.n_steps)
    if abs(ul - ur) > tol:
        raise NotEligible(f"u({tau:g}, .) jumps at x={x:g}")
    a, b = state.edges(k)
    pos = list(state.positions)
    regs = list(state.regions)
    if kind == "pair":
        if reg.theta == 0:
            new = [_restrict(reg, tau, a, x), Region(1, IncreasingEvolution.fan(pair.f, tau, x), seed=True),
                   _restrict(reg, tau, x, b)]
        else:
            new = [_restrict(reg, tau, a, x), Region(0, None), _restrict(reg, tau, x, b)]
        regs[k : k + 1] = new
        pos[k:k] = [x, x]
    elif kind in ("max", "min"):
        if reg.theta != 0:
            raise NotEligible("theta is already 1 around x_tilde")
        c, d = _constant_stretch(reg.evo, tau, x, a, b)
        lo, hi = (c, x) if kind == "max" else (x, d)
        if not hi > lo:
            raise NotEligible("no constant stretch on the requested side")
        ends = np.array([v for v in (lo, hi) if np.isfinite(v)])
        flat = IncreasingEvolution.from_nodes(
            pair.f, tau, ends, np.full(ends.size, ul),
            left_fan=bool(np.isfinite(lo)), right_fan=bool(np.isfinite(hi)),
        )
        new, cuts = [], []
        if lo > a:
            new.append(_restrict(reg, tau, a, lo))
            cuts.append(lo)
        new.append(Region(1, flat))
        if hi < b:
            new.append(_restrict(reg, tau, hi, b))
            cuts.append(hi)
        regs[k : k + 1] = new
        pos[k:k] = cuts
    else:
        raise ValueError(f"unknown spike kind {kind!r}")
    st = State(tau, pos, regs)
    T = timeline.horizon if horizon is None else float(horizon)
    return CauchyProblem(pair, None, None, horizon=T, t0=tau, state=st,
                         n_steps=timeline.problem.n_steps, rtol=timeline.problem.rtol)


def _constant_stretch(evo, t, x, a, b):
    """Largest interval around ``x`` inside ``(a, b)`` where ``evo`` is constant at time ``t``."""
    bp = evo.breakpoints(t)
    bp = bp[(bp > a) & (bp < b)]
    left = bp[bp < x]
    right = bp[bp > x]
    c = float(left[-1]) if left.size else a
    d = float(right[0]) if right.size else b
    return c, d
