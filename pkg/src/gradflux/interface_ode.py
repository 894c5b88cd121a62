"""Interface trajectories between two background evolutions.

The interface obeys ``y' = H(t, y)``, the Rankine-Hugoniot quotient of the
left background's trace ``u(t, y-)`` (left flux) and the right background's
trace ``u(t, y+)`` (right flux).  ``H`` jumps across shock fronts of either
background and has kinks across rarefaction edges, so both integrators
split time at the instants where the trajectory crosses a front.
"""
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre
from scipy.integrate import DOP853
from scipy.optimize import brentq

from .errors import DegenerateDenominator, GradFluxError, NoConvergence, TubeExit
from .riemann import solve_riemann

DENOM_TOL = 1e-8
GAUSS_NODES = 8
GRID_SIZE = 2048
GEOM_RATIO = 0.9
GEOM_FLOOR = 1e-6


@dataclass
class InterfaceProblem:
    """Interface starting at ``(t_start, y_start)`` between ``left`` and ``right``.

    ``theta_left``/``theta_right`` select the flux on each side.  When
    ``predicted_speed`` is omitted it comes from the Riemann fan of the
    one-sided limits at the starting point.
    """

    pair: object
    left: object
    right: object
    theta_left: int
    theta_right: int
    t_start: float = 0.0
    y_start: float = 0.0
    predicted_speed: float = None
    tube_width: float = None

    def __post_init__(self):
        self.left_flux = self.pair.by_theta(self.theta_left)
        self.right_flux = self.pair.by_theta(self.theta_right)
        if self.predicted_speed is None or self.tube_width is None:
            speed, width = self._riemann_prediction()
            if self.predicted_speed is None:
                self.predicted_speed = speed
            if self.tube_width is None:
                self.tube_width = width
        self._fronts_cache = {}

    def _riemann_prediction(self):
        t, y = self.t_start, self.y_start
        ul = float(self.left.query(t, np.array([y]), "-")[0])
        ur = float(self.right.query(t, np.array([y]), "+")[0])
        fan = solve_riemann(self.pair, ul, ur, self.theta_left, self.theta_right)
        waves = [w for w in fan.waves if w.is_interface]
        if len(waves) != 1:
            raise ValueError(f"no single interface wave for case {fan.case}")
        w = waves[0]
        cl = self.pair.by_theta(w.theta_left).deriv(w.u_left)
        cr = self.pair.by_theta(w.theta_right).deriv(w.u_right)
        width = 0.1 * abs(float(cl - cr))
        return w.speed, width if width > 0 else 0.1 * (1.0 + abs(w.speed))

    def traces(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        return self.left.query(t, x, "-"), self.right.query(t, x, "+")

    def fronts(self, t1, t2):
        """Front segments of both backgrounds as arrays ``(t0, x0, speed, t1, is_jump)``."""
        key = (t1, t2)
        if key not in self._fronts_cache:
            fr = self.left.fronts(t1, t2) + self.right.fronts(t1, t2)
            arr = np.array(
                [(f.t0, f.x0, f.speed, f.t1, f.kind == "jump") for f in fr], dtype=float
            ).reshape(-1, 5)
            self._fronts_cache = {key: arr}
        return self._fronts_cache[key]


def eval_H(problem, t, x):
    """Rankine-Hugoniot speed of the traces at ``(t, x)`` (vectorized)."""
    ul, ur = problem.traces(t, x)
    du = ul - ur
    scale = 1.0 + np.abs(ul) + np.abs(ur)
    bad = np.abs(du) < DENOM_TOL * scale
    if np.any(bad):
        i = int(np.argmax(bad.ravel()))
        tt = np.broadcast_to(np.asarray(t, float), bad.shape).ravel()[i]
        xx = np.broadcast_to(np.asarray(x, float), bad.shape).ravel()[i]
        raise DegenerateDenominator(
            f"traces coincide ({ul.ravel()[i]:.17g}) at t={tt:.17g}, x={xx:.17g}", t=tt, x=xx
        )
    return (problem.left_flux(ul) - problem.right_flux(ur)) / du


def predict_speed(problem):
    return problem.predicted_speed


def weighted_distance(y, z, times, t_start=0.0):
    """``sup |y - z| / (t - t_start)`` over ``times > t_start``."""
    times = np.asarray(times, dtype=float)
    times = times[times > t_start]
    if times.size == 0:
        return 0.0
    return float(np.max(np.abs(y(times) - z(times)) / (times - t_start)))


class Trajectory:
    """Piecewise smooth curve ``y(t)`` on ``[t_start, t_end]``.

    ``pieces`` is a list of ``(t_a, t_b, fn)`` with vectorized ``fn``.
    """

    def __init__(self, pieces, problem=None):
        self.pieces = list(pieces)
        self.problem = problem
        self.starts = np.array([p[0] for p in self.pieces])
        self.t_start = float(self.pieces[0][0])
        self.t_end = float(self.pieces[-1][1])

    @classmethod
    def linear(cls, t_start, y_start, speed, t_end, problem=None):
        return cls([(t_start, t_end, lambda t: y_start + speed * (t - t_start))], problem)

    @property
    def y_start(self):
        return float(self(self.t_start))

    @property
    def knots(self):
        return np.append(self.starts, self.t_end)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t).ravel()
        k = np.clip(np.searchsorted(self.starts, flat, side="right") - 1, 0, len(self.pieces) - 1)
        out = np.empty(flat.shape)
        for kk in np.unique(k):
            m = k == kk
            out[m] = self.pieces[kk][2](flat[m])
        return out.reshape(t.shape) if t.ndim else float(out[0])

    def truncate(self, t_end):
        keep = [p for p in self.pieces if p[0] < t_end]
        a, _, fn = keep[-1]
        keep[-1] = (a, t_end, fn)
        return Trajectory(keep, self.problem)

    def speed(self, t):
        return eval_H(self.problem, t, self(t))

    def rows(self, times=None):
        """Columns ``t, y, ydot, u_left, u_right`` at ``times`` (default: knots)."""
        t = self.knots if times is None else np.asarray(times, dtype=float)
        t = t[t > self.t_start] if times is None else t
        y = self(t)
        ul, ur = self.problem.traces(t, y)
        return np.column_stack([t, y, eval_H(self.problem, t, y), ul, ur])


# --- event-aware stepping -------------------------------------------------


def _front_crossing(fronts, sol, ta, tb):
    """Earliest time in ``(ta, tb]`` where ``sol`` crosses a front, or None."""
    if fronts.shape[0] == 0:
        return None
    t0, x0, sp, t1 = fronts[:, 0], fronts[:, 1], fronts[:, 2], fronts[:, 3]
    lo = np.maximum(ta, t0)
    hi = np.minimum(tb, t1)
    live = hi > lo
    if not np.any(live):
        return None
    lo, hi = lo[live], hi[live]
    x0, sp, t0 = x0[live], sp[live], t0[live]
    da = sol(lo) - (x0 + sp * (lo - t0))
    db = sol(hi) - (x0 + sp * (hi - t0))
    cand = np.nonzero(da * db < 0)[0]
    if cand.size == 0:
        return None
    best = None
    for i in cand:
        fx = lambda s, i=i: sol(s) - (x0[i] + sp[i] * (s - t0[i]))
        tc = brentq(fx, lo[i], hi[i], xtol=1e-14, rtol=1e-15)
        if best is None or tc < best[0]:
            best = (tc, x0[i] + sp[i] * (tc - t0[i]), np.sign(db[i]))
    return best


def _scalar_sol(dense):
    def fn(t):
        return np.asarray(dense(np.asarray(t, dtype=float)))[0] if np.ndim(t) else float(dense(t)[0])

    return fn


def step_integrate(problem, t_end, rtol=1e-12, h0=None, partial=False):
    """Adaptive DOP853 integration restarted at every front crossing.

    With ``partial`` set, a solver error ends the trajectory early instead of
    propagating; the error is kept in ``trajectory.failure``.
    """
    ts, ys = float(problem.t_start), float(problem.y_start)
    span = max(t_end - ts, 0.0)
    lam = float(problem.predicted_speed)
    if h0 is None:
        h0 = 1e-10 * max(span, 1e-3)
    h0 = min(h0, span)
    pieces = [(ts, ts + h0, lambda t: ys + lam * (np.asarray(t, float) - ts))]
    fronts = problem.fronts(ts, t_end)
    t, y = ts + h0, ys + lam * h0
    atol = 1e-14 * (1.0 + abs(ys))

    def rhs(s, v):
        return np.array([float(eval_H(problem, s, v[0]))])

    try:
        _step_loop(problem, rhs, fronts, pieces, t, y, t_end, rtol, atol)
    except GradFluxError as exc:
        if not partial:
            raise
        traj = Trajectory(pieces, problem)
        traj.failure = exc
        return traj
    traj = Trajectory(pieces, problem)
    traj.failure = None
    return traj


def _predict_crossing(fronts, t, y, slope, t_end):
    """Earliest front hit by the tangent line at ``(t, y)``, and that front."""
    if fronts.shape[0] == 0:
        return t_end, None
    t0, x0, sp, t1 = fronts[:, 0], fronts[:, 1], fronts[:, 2], fronts[:, 3]
    gap = x0 + sp * (t - t0) - y
    rel = slope - sp
    with np.errstate(divide="ignore", invalid="ignore"):
        tc = t + gap / rel
    ok = (gap * rel > 0) & (tc >= t0) & (tc <= t1) & (tc < t_end)
    if not np.any(ok):
        return t_end, None
    j = int(np.argmin(np.where(ok, tc, np.inf)))
    return float(tc[j]), j


def _step_loop(problem, rhs, fronts, pieces, t, y, t_end, rtol, atol):
    """Integrate in legs that end at the predicted next front crossing.

    Ending a leg right at the front keeps the discontinuity of ``H`` out of
    the Runge-Kutta stages; a missed or early crossing is caught from the
    dense output.  At a crossing the state is nudged to the far side.
    """
    legs = 0
    h_prev = None
    tiny = 1e-14 * (1.0 + abs(t_end))
    while t < t_end - tiny:
        legs += 1
        if legs > 200000:
            raise NoConvergence("too many integration legs")
        slope = float(rhs(t, [y])[0])
        tc, j = _predict_crossing(fronts, t, y, slope, t_end)
        if j is not None and tc - t <= 4 * tiny:
            # sitting on a front: step across it
            xf = fronts[j, 1] + fronts[j, 2] * (tc - fronts[j, 0])
            side = np.sign(slope - fronts[j, 2])
            pieces.append((t, tc, lambda s, y0=y, t0=t, k=slope: y0 + k * (np.asarray(s, float) - t0)))
            t, y = tc, xf + side * 1e-13 * (1.0 + abs(xf))
            continue
        bound = tc if j is None else min(t_end, tc + 1e-12 * (tc - t))
        first = None if h_prev is None else min(h_prev, bound - t)
        solver = DOP853(rhs, t, [y], bound, rtol=rtol, atol=atol, first_step=first)
        crossed = False
        while solver.status == "running":
            ta = solver.t
            solver.step()
            if solver.status == "failed":
                raise NoConvergence(f"step integration failed at t={ta:.17g}: {solver.message}")
            tb = solver.t
            h_prev = max(solver.step_size or 0.0, 1e-300) if solver.step_size else h_prev
            sol = _scalar_sol(solver.dense_output())
            hit = _front_crossing(fronts, sol, ta, tb)
            if hit is not None and hit[0] > ta:
                tcx, xc, side = hit
                pieces.append((ta, tcx, sol))
                t, y = tcx, xc + side * 1e-13 * (1.0 + abs(xc))
                crossed = True
                break
            pieces.append((ta, tb, sol))
        if not crossed:
            t, y = solver.t, float(solver.y[0])


# --- Picard iteration by piecewise Gauss collocation ---------------------

_GX, _GW = legendre.leggauss(GAUSS_NODES)
_C = 0.5 * (_GX + 1.0)
_B = 0.5 * _GW
# coefficients of the Lagrange basis on the nodes, then their antiderivatives
_LAGRANGE = np.linalg.inv(np.vander(_C, increasing=True))  # columns -> basis polys
_ANTI = np.vstack([np.zeros(GAUSS_NODES), _LAGRANGE / np.arange(1, GAUSS_NODES + 1)[:, None]])


def _integrated_basis(frac):
    """Matrix ``[i, j] = int_0^{frac_i} l_j``."""
    frac = np.asarray(frac, dtype=float)
    powers = frac[:, None] ** np.arange(GAUSS_NODES + 1)
    return powers @ _ANTI


class _Collocation:
    """Piecewise polynomial ``y(t) = y_k + h_k sum_j K_kj int l_j``."""

    def __init__(self, grid, y_nodes, K):
        self.grid = grid
        self.y = y_nodes
        self.K = K

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t).ravel()
        g = self.grid
        k = np.clip(np.searchsorted(g, flat, side="right") - 1, 0, g.size - 2)
        h = g[k + 1] - g[k]
        frac = (flat - g[k]) / h
        out = self.y[k] + h * np.sum(_integrated_basis(frac) * self.K[k], axis=1)
        return out.reshape(t.shape) if t.ndim else float(out[0])

    def slope(self, t):
        """Interpolated integrand (the derivative) at ``t``."""
        flat = np.atleast_1d(np.asarray(t, dtype=float))
        g = self.grid
        k = np.clip(np.searchsorted(g, flat, side="right") - 1, 0, g.size - 2)
        frac = (flat - g[k]) / (g[k + 1] - g[k])
        basis = (frac[:, None] ** np.arange(GAUSS_NODES)) @ _LAGRANGE
        return np.sum(basis * self.K[k], axis=1)


def default_grid(t_start, t_end, size=GRID_SIZE, ratio=GEOM_RATIO, floor=GEOM_FLOOR):
    span = t_end - t_start
    uni = np.linspace(0.0, span, size + 1)
    n_geo = int(np.ceil(np.log(floor) / np.log(ratio)))
    geo = span * ratio ** np.arange(n_geo + 1)
    g = np.unique(np.concatenate([uni, geo]))
    return t_start + g


def _picard_apply(problem, y_fn, grid):
    """One application of the integral operator on ``grid`` with ``y_fn`` as input."""
    h = np.diff(grid)
    stage_t = grid[:-1, None] + h[:, None] * _C[None, :]
    K = eval_H(problem, stage_t, y_fn(stage_t))
    y_nodes = problem.y_start + np.concatenate([[0.0], np.cumsum(h * (K @ _B))])
    return _Collocation(grid, y_nodes, K)


def _crossing_times(fronts, coll, t_lo, t_hi):
    """Times where the collocation curve crosses a front inside a grid interval."""
    if fronts.shape[0] == 0:
        return []
    g = coll.grid
    out = []
    t0, x0, sp, t1 = fronts[:, 0], fronts[:, 1], fronts[:, 2], fronts[:, 3]
    # sample each interval at its ends and stage nodes to catch sign changes
    frac = np.concatenate([[0.0], _C, [1.0]])
    ts = (g[:-1, None] + np.diff(g)[:, None] * frac[None, :]).ravel()
    ts = np.unique(np.clip(ts, t_lo, t_hi))
    ys = coll(ts)
    for i in range(fronts.shape[0]):
        m = (ts >= t0[i]) & (ts <= t1[i])
        if np.count_nonzero(m) < 2:
            continue
        tt = ts[m]
        d = ys[m] - (x0[i] + sp[i] * (tt - t0[i]))
        s = np.nonzero(d[:-1] * d[1:] < 0)[0]
        for j in s:
            fn = lambda u, i=i: coll(u) - (x0[i] + sp[i] * (u - t0[i]))
            out.append(brentq(fn, tt[j], tt[j + 1], xtol=1e-15, rtol=1e-15))
    return out


def picard_iterate(problem, initial_guess=None, t_end=None, max_iters=200, tol=1e-12,
                   grid=None, tube=True):
    """Fixed point of ``(P y)(t) = y_start + int H(s, y(s)) ds`` on ``[t_start, t_end]``.

    Convergence is measured in the weighted distance ``sup |dy| / (t - t_start)``.
    With ``tube`` set, every iterate's slope must stay within ``tube_width`` of
    the predicted speed or :class:`TubeExit` is raised.
    """
    ts, ys = problem.t_start, problem.y_start
    if t_end is None:
        t_end = initial_guess.t_end
    if initial_guess is None:
        initial_guess = Trajectory.linear(ts, ys, problem.predicted_speed, t_end, problem)
    if grid is None:
        grid = default_grid(ts, t_end)
    fronts = problem.fronts(ts, t_end)
    y_fn = initial_guess
    for it in range(max_iters):
        coll = _picard_apply(problem, y_fn, grid)
        if tube and np.any(np.abs(coll.K - problem.predicted_speed) > problem.tube_width):
            raise TubeExit(f"slope left the tube of width {problem.tube_width:g} before t={t_end:.17g}")
        tnodes = grid[1:]
        dist = float(np.max(np.abs(coll(tnodes) - y_fn(tnodes)) / (tnodes - ts)))
        extra = _crossing_times(fronts, coll, ts, t_end)
        extra = [c for c in extra if np.min(np.abs(grid - c)) > 1e-14 * (1.0 + abs(c))]
        if extra:
            grid = np.unique(np.concatenate([grid, extra]))
        elif dist <= tol:
            return _collocation_trajectory(coll, problem, it + 1, dist)
        y_fn = coll
    raise NoConvergence(f"Picard iteration stalled at distance {dist:.3g} after {max_iters} iterations")


def _collocation_trajectory(coll, problem, iterations, dist):
    g = coll.grid
    traj = Trajectory([(g[0], g[-1], coll)], problem)
    traj.starts = g[:-1].copy()
    traj.pieces = [(a, b, coll) for a, b in zip(g[:-1], g[1:])]
    traj.iterations = iterations
    traj.final_distance = dist
    return traj


def picard_solve(problem, t_end, shrink_floor=GEOM_FLOOR, **kw):
    """:func:`picard_iterate`, halving the horizon on :class:`TubeExit`."""
    span = t_end - problem.t_start
    horizon = span
    while True:
        try:
            return picard_iterate(problem, t_end=problem.t_start + horizon, **kw)
        except TubeExit:
            horizon *= 0.5
            if horizon < shrink_floor * span:
                raise


def measure_contraction(problem, y, z, grid=None):
    """``d(Py, Pz) / d(y, z)`` on a common grid (0 when ``y == z``)."""
    ts = problem.t_start
    t_end = min(y.t_end, z.t_end)
    if grid is None:
        grid = default_grid(ts, t_end)
    nodes = grid[1:]
    d0 = float(np.max(np.abs(y(nodes) - z(nodes)) / (nodes - ts)))
    if d0 == 0.0:
        return 0.0
    py = _picard_apply(problem, y, grid)
    pz = _picard_apply(problem, z, grid)
    d1 = float(np.max(np.abs(py(nodes) - pz(nodes)) / (nodes - ts)))
    return d1 / d0
