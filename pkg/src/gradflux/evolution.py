"""Single-flux evolution of monotone data (the background solutions).

Two representations cover every background used by the mixed-flux solver:

* :class:`IncreasingEvolution` -- non-decreasing data under a convex flux.
  No shocks form, so the solution is read off the completed graph of the
  data transported along straight characteristics.  Upward jumps and the
  extended ``-inf``/``+inf`` end states become centered rarefaction fans.
* :class:`StaircaseEvolution` -- non-increasing piecewise constant data.
  Only shocks occur; they are tracked exactly and merged on collision.
  Smooth decreasing data is replaced by a monotone staircase first.
"""
import bisect
from dataclasses import dataclass

import numpy as np

from .errors import DomainExceeded, OrientationMismatch, RootOutOfDomain
from .profile import JUMP_REL_TOL, restrict_nodes

N_STEPS = 256
MERGE_TOL = 1e-12

FAN, SEG = 0, 1


@dataclass(frozen=True)
class Front:
    """Straight front ``x(t) = x0 + speed * (t - t0)`` alive on ``[t0, t1]``."""

    t0: float
    x0: float
    speed: float
    t1: float
    kind: str  # "jump" or "kink"

    def position(self, t):
        return self.x0 + self.speed * (np.asarray(t, dtype=float) - self.t0)


def _as_arrays(t, x):
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    t, x = np.broadcast_arrays(t, x)
    return t.astype(float), x.astype(float)


class IncreasingEvolution:
    """Entropy solution of ``u_t + flux(u)_x = 0`` for non-decreasing data.

    The completed graph is a chain of pieces; each piece is either a fan
    ``(t_c, x_c, u_lo, u_hi)`` or a segment ``(t_b, x_a, u_a, x_b, u_b)``
    with linear interpolation between its end nodes at anchor time ``t_b``.
    A point of the graph with value ``u`` anchored at ``(s, y)`` sits at
    ``y + (t - s) flux'(u)`` at time ``t``.  ``left_const``/``right_const``
    mean the outermost value extends to infinity; otherwise the end is a fan
    to ``-inf``/``+inf``.
    """

    orientation = "increasing"

    def __init__(self, flux, pieces, t_start):
        self.flux = flux
        self.pieces = list(pieces)
        self.t_start = float(t_start)
        if not self.pieces:
            raise ValueError("empty evolution")
        nodes = []
        for k, p in enumerate(self.pieces):
            if p[0] == FAN:
                _, tc, xc, lo, hi = p
                left, right = (tc, xc, lo), (tc, xc, hi)
            else:
                _, tb, xa, ua, xb, ub = p
                left, right = (tb, xa, ua), (tb, xb, ub)
            if k == 0:
                nodes.append(left)
            nodes.append(right)
        self._nt = np.array([n[0] for n in nodes])
        self._nx = np.array([n[1] for n in nodes])
        self._nu = np.array([n[2] for n in nodes])
        self._kind = np.array([p[0] for p in self.pieces])
        self._finite = np.isfinite(self._nu)
        self._all_finite = bool(np.all(self._finite))
        self._nsp = np.where(self._finite, flux.deriv(np.where(self._finite, self._nu, 0.0)), 0.0)
        self._inf_pos = np.where(self._nu > 0, np.inf, -np.inf)
        self.left_const = np.isfinite(self._nu[0])
        self.right_const = np.isfinite(self._nu[-1])

    # construction -----------------------------------------------------

    @classmethod
    def from_nodes(cls, flux, t0, xs, us, left_fan=False, right_fan=False):
        """Build from a completed graph of non-decreasing data at time ``t0``."""
        xs = np.asarray(xs, dtype=float)
        us = np.asarray(us, dtype=float)
        scale = 1.0 + float(np.max(np.abs(us[np.isfinite(us)]))) if us.size else 1.0
        if np.any(np.diff(us) < -JUMP_REL_TOL * scale):
            raise OrientationMismatch("data must be non-decreasing")
        us = np.maximum.accumulate(us)
        pieces = []
        if left_fan:
            pieces.append((FAN, t0, xs[0], -np.inf, us[0]))
        for k in range(xs.size - 1):
            if xs[k + 1] == xs[k]:
                if us[k + 1] > us[k]:
                    pieces.append((FAN, t0, xs[k], us[k], us[k + 1]))
            else:
                pieces.append((SEG, t0, xs[k], us[k], xs[k + 1], us[k + 1]))
        if right_fan:
            pieces.append((FAN, t0, xs[-1], us[-1], np.inf))
        if not pieces:
            # constant data on the whole line: any vertical-free piece will do
            pieces.append((SEG, t0, xs[0] - 1.0, us[0], xs[0], us[0]))
        return cls(flux, pieces, t0)

    @classmethod
    def fan(cls, flux, t0, x0, u_lo=-np.inf, u_hi=np.inf):
        return cls(flux, [(FAN, t0, x0, u_lo, u_hi)], t0)

    # evaluation -------------------------------------------------------

    def _node_positions(self, t):
        """Node positions at times ``t`` (shape ``t.shape + (K+1,)``)."""
        dt = np.asarray(t, dtype=float)[..., None] - self._nt
        pos = self._nx + dt * self._nsp
        if self._all_finite:
            return pos
        return np.where(self._finite, pos, np.where(dt > 0, self._inf_pos, self._nx))

    def query(self, t, x, side="+"):
        t, x = _as_arrays(t, x)
        shape = x.shape
        t = t.ravel()
        x = x.ravel()
        P = self._node_positions(t)
        if side == "+":
            k = np.sum(P <= x[:, None], axis=1) - 1
        else:
            k = np.sum(P < x[:, None], axis=1) - 1
        K = len(self.pieces)
        out = np.empty(x.shape)
        lo = k < 0
        hi = k >= K
        out[lo] = self._nu[0]
        out[hi] = self._nu[-1]
        for kk in np.unique(k[~(lo | hi)]):
            m = k == kk
            out[m] = self._eval_piece(int(kk), t[m], x[m], side)
        return out.reshape(shape)

    def _eval_piece(self, k, t, x, side):
        p = self.pieces[k]
        if p[0] == FAN:
            _, tc, xc, ulo, uhi = p
            dt = t - tc
            res = np.empty(x.shape)
            degenerate = dt <= 0
            res[degenerate] = uhi if side == "+" else ulo
            nd = ~degenerate
            if np.any(nd):
                speed = (x[nd] - xc) / dt[nd]
                try:
                    w = self.flux.deriv_inv(speed)
                except RootOutOfDomain as exc:
                    raise DomainExceeded(str(exc)) from exc
                res[nd] = np.clip(w, ulo, uhi)
            return res
        _, tb, xa, ua, xb, ub = p
        tau = t - tb
        f = self.flux
        dx = xb - xa
        du = ub - ua
        a = np.zeros(x.shape)
        b = np.ones(x.shape)
        s = np.full(x.shape, 0.5)
        if f.is_quadratic:
            c1, c2 = f.coefficients[1], f.coefficients[2]
            # x = xa + s dx + tau (c1 + 2 c2 (ua + s du))
            denom = dx + tau * 2 * c2 * du
            s = (x - xa - tau * (c1 + 2 * c2 * ua)) / denom
            s = np.clip(s, 0.0, 1.0)
            return ua + s * du
        for _ in range(100):
            u = ua + s * du
            G = xa + s * dx + tau * f.deriv(u) - x
            a = np.where(G < 0, s, a)
            b = np.where(G >= 0, s, b)
            dG = dx + tau * f.deriv2(u) * du
            step = s - G / dG
            ok = (step > a) & (step < b)
            s_new = np.where(ok, step, 0.5 * (a + b))
            done = np.all(np.abs(s_new - s) <= 1e-15)
            s = s_new
            if done:
                break
        return ua + s * du

    def breakpoints(self, t):
        """Positions of kinks (node characteristics) at time ``t``."""
        P = self._node_positions(np.array(float(t)))
        return P[np.isfinite(P)]

    def fronts(self, t1, t2):
        out = []
        for ti, xi, ui in zip(self._nt, self._nx, self._nu):
            if np.isfinite(ui) and ti < t2:
                s = float(self.flux.deriv(ui))
                t0 = max(t1, ti)
                out.append(Front(t0, xi + s * (t0 - ti), s, t2, "kink"))
        return out

    def value_range(self):
        return float(self._nu[0]), float(self._nu[-1])

    # restriction ------------------------------------------------------

    def _locate(self, t, x, side):
        """Piece index and local parameter (segment fraction or fan value) of ``x``."""
        P = self._node_positions(np.array(float(t)))
        k = int(np.sum(P <= x) - 1) if side == "+" else int(np.sum(P < x) - 1)
        u = float(self.query(t, np.array([x]), side)[0])
        K = len(self.pieces)
        if k < 0 or k >= K:
            return k, None, u
        p = self.pieces[k]
        if p[0] == FAN:
            return k, u, u
        _, tb, xa, ua, xb, ub = p
        if ub != ua:
            return k, (u - ua) / (ub - ua), u
        # constant segment: recover the foot of the characteristic through x
        foot = x - (t - tb) * float(self.flux.deriv(ua))
        return k, (foot - xa) / (xb - xa), u

    def restrict(self, t, a, b, left_fan=True, right_fan=True):
        """The solution on ``(a, b)`` at time ``t`` as fresh data, extended by fans.

        Characteristics inside ``(a, b)`` keep their anchors, so the result
        is exact for all later times.  A fan to ``-inf`` is placed at ``a``
        and one to ``+inf`` at ``b`` (when finite and requested).
        """
        t = float(t)
        K = len(self.pieces)
        f = self.flux
        if np.isfinite(a):
            ka, pa, ua = self._locate(t, a, "+")
        else:
            ka, pa, ua = -1, None, float(self._nu[0])
        if np.isfinite(b):
            kb, pb, ub = self._locate(t, b, "-")
        else:
            kb, pb, ub = K, None, float(self._nu[-1])
        pieces = []
        if np.isfinite(a) and left_fan:
            pieces.append((FAN, t, a, -np.inf, ua))
        if ka < 0 and np.isfinite(a):
            # inside the constant left tail
            s = float(f.deriv(ua))
            foot = a - (t - self._nt[0]) * s
            if kb < 0:
                footb = b - (t - self._nt[0]) * s
                pieces.append((SEG, self._nt[0], foot, ua, footb, ua))
            elif foot < self._nx[0]:
                pieces.append((SEG, self._nt[0], foot, ua, self._nx[0], ua))
        for k in range(max(ka, 0), min(kb, K - 1) + 1):
            p = self.pieces[k]
            lo_cut = pa if k == ka else None
            hi_cut = pb if k == kb else None
            if p[0] == FAN:
                _, tc, xc, ulo, uhi = p
                ulo = lo_cut if lo_cut is not None else ulo
                uhi = hi_cut if hi_cut is not None else uhi
                if uhi > ulo or (np.isfinite(a) and np.isfinite(b) and a == b):
                    pieces.append((FAN, tc, xc, ulo, uhi))
            else:
                _, tb, xa, ua_, xb, ub_ = p
                s0 = lo_cut if lo_cut is not None else 0.0
                s1 = hi_cut if hi_cut is not None else 1.0
                if s1 > s0:
                    pieces.append(
                        (SEG, tb, xa + s0 * (xb - xa), ua_ + s0 * (ub_ - ua_),
                         xa + s1 * (xb - xa), ua_ + s1 * (ub_ - ua_))
                    )
        if kb >= K and np.isfinite(b):
            s = float(f.deriv(ub))
            footb = b - (t - self._nt[-1]) * s
            if ka >= K:
                foota = a - (t - self._nt[-1]) * s
                pieces.append((SEG, self._nt[-1], foota, ub, footb, ub))
            elif footb > self._nx[-1]:
                pieces.append((SEG, self._nt[-1], self._nx[-1], ub, footb, ub))
        if np.isfinite(b) and right_fan:
            pieces.append((FAN, t, b, ub, np.inf))
        if not pieces:
            x0 = a if np.isfinite(a) else (b if np.isfinite(b) else 0.0)
            pieces.append((SEG, t, x0 - 1.0, ua, x0, ua))
        return IncreasingEvolution(f, pieces, t)

    @staticmethod
    def join(left, right, t, x, a=-np.inf, b=np.inf):
        """Glue two increasing solutions at ``x`` (left limit <= right limit).

        The upward jump at ``x`` becomes a centered fan anchored at ``(t, x)``.
        """
        L = left.restrict(t, a, x, left_fan=np.isfinite(a), right_fan=False)
        R = right.restrict(t, x, b, left_fan=False, right_fan=np.isfinite(b))
        ul = L._nu[-1]
        ur = R._nu[0]
        pieces = list(L.pieces)
        if ur > ul:
            pieces.append((FAN, t, x, ul, ur))
        pieces.extend(R.pieces)
        return IncreasingEvolution(left.flux, pieces, t)


class StaircaseEvolution:
    """Front-tracked solution for non-increasing piecewise constant data.

    ``values[k]`` holds on ``(edges[k-1], edges[k])``; the outer values extend
    to infinity.
    """

    orientation = "decreasing"

    def __init__(self, flux, t0, edges, values):
        self.flux = flux
        self.t_start = float(t0)
        edges = np.asarray(edges, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.size != edges.size + 1:
            raise ValueError("need len(values) == len(edges) + 1")
        scale = 1.0 + float(np.max(np.abs(values)))
        if np.any(np.diff(values) > JUMP_REL_TOL * scale):
            raise OrientationMismatch("staircase data must be non-increasing")
        keep = np.abs(np.diff(values)) > JUMP_REL_TOL * scale
        edges = edges[keep]
        values = np.concatenate([values[:1], values[1:][keep]])
        self._times = [self.t_start]
        self._snaps = []
        self._track(edges, values)

    def _speeds(self, v):
        f = self.flux
        return (f(v[:-1]) - f(v[1:])) / (v[:-1] - v[1:])

    def _track(self, p, v):
        T = self.t_start
        s = self._speeds(v)
        self._snaps.append((p.copy(), s.copy(), v.copy()))
        while p.size >= 2:
            dp = p[1:] - p[:-1]
            ds = s[:-1] - s[1:]
            with np.errstate(divide="ignore", invalid="ignore"):
                dt = np.where(ds > 0, dp / np.where(ds > 0, ds, 1.0), np.inf)
            dtmin = float(np.min(dt))
            if not np.isfinite(dtmin):
                break
            T = T + dtmin
            p = p + s * dtmin
            tol = MERGE_TOL * (1.0 + float(np.max(np.abs(p))))
            groups = [[0]]
            for i in range(1, p.size):
                if p[i] - p[groups[-1][-1]] <= tol:
                    groups[-1].append(i)
                else:
                    groups.append([i])
            new_p = np.array([np.mean(p[g]) for g in groups])
            new_v = [v[0]] + [v[g[-1] + 1] for g in groups]
            p = new_p
            v = np.array(new_v)
            s = self._speeds(v)
            self._times.append(T)
            self._snaps.append((p.copy(), s.copy(), v.copy()))

    @classmethod
    def from_nodes(cls, flux, t0, xs, us, n_steps=N_STEPS):
        edges, values = staircase_from_nodes(xs, us, n_steps)
        return cls(flux, t0, edges, values)

    def _snapshot_index(self, t):
        return np.searchsorted(np.array(self._times), t, side="right") - 1

    def shocks(self, t):
        """Shock positions, speeds and left/right values at time ``t``."""
        e = max(int(self._snapshot_index(float(t))), 0)
        p, s, v = self._snaps[e]
        pos = p + s * (float(t) - self._times[e])
        return pos, s, v[:-1], v[1:]

    def query(self, t, x, side="+"):
        t, x = _as_arrays(t, x)
        shape = x.shape
        t = t.ravel()
        x = x.ravel()
        e = np.maximum(self._snapshot_index(t), 0)
        out = np.empty(x.shape)
        for ee in np.unique(e):
            m = e == ee
            p, s, v = self._snaps[ee]
            if p.size == 0:
                out[m] = v[0]
                continue
            pos = p[None, :] + s[None, :] * (t[m] - self._times[ee])[:, None]
            if side == "+":
                k = np.sum(pos <= x[m][:, None], axis=1)
            else:
                k = np.sum(pos < x[m][:, None], axis=1)
            out[m] = v[k]
        return out.reshape(shape)

    def breakpoints(self, t):
        return self.shocks(t)[0]

    def fronts(self, t1, t2):
        out = []
        times = self._times + [np.inf]
        for e, (p, s, _) in enumerate(self._snaps):
            ta, tb = times[e], times[e + 1]
            lo, hi = max(ta, t1), min(tb, t2)
            if hi < lo:
                continue
            for pi, si in zip(p, s):
                out.append(Front(lo, pi + si * (lo - ta), si, hi, "jump"))
        return out

    def value_range(self):
        v = self._snaps[0][2]
        return float(v[-1]), float(v[0])

    def restrict(self, t, a, b):
        pos, _, vl, vr = self.shocks(t)
        inside = (pos > a) & (pos < b)
        if np.isfinite(a):
            first = float(self.query(t, np.array([a]), "+")[0])
        else:
            first = float(self._snaps[max(int(self._snapshot_index(float(t))), 0)][2][0])
        values = [first] + list(vr[inside])
        edges = list(pos[inside])
        return StaircaseEvolution(self.flux, t, edges, values)

    @staticmethod
    def join(left, right, t, x, a=-np.inf, b=np.inf):
        """Glue two staircases at ``x``; a downward jump there becomes a new shock."""
        L = left.restrict(t, a, x)
        R = right.restrict(t, x, b)
        pl, _, _, _ = L.shocks(t)
        pr, _, _, _ = R.shocks(t)
        vl = L._snaps[0][2]
        vr = R._snaps[0][2]
        edges = list(pl) + [x] + list(pr)
        values = list(vl) + list(vr)
        return StaircaseEvolution(left.flux, t, edges, values)


def staircase_from_nodes(xs, us, n_steps=N_STEPS):
    """Monotone staircase approximation of non-increasing node data.

    Each decreasing linear piece gets a number of cells proportional to its
    share of the total variation; cell values are exact cell averages.
    """
    xs = np.asarray(xs, dtype=float)
    us = np.asarray(us, dtype=float)
    scale = 1.0 + float(np.max(np.abs(us)))
    if np.any(np.diff(us) > JUMP_REL_TOL * scale):
        raise OrientationMismatch("data must be non-increasing")
    if xs.size == 1:
        return np.array([]), us.copy()
    cont = 0.0
    for k in range(xs.size - 1):
        if xs[k + 1] > xs[k]:
            cont += us[k] - us[k + 1]
    cells = []  # (a, b, value)
    for k in range(xs.size - 1):
        a, b = xs[k], xs[k + 1]
        if b <= a:
            continue
        drop = us[k] - us[k + 1]
        if drop <= JUMP_REL_TOL * scale:
            cells.append((a, b, 0.5 * (us[k] + us[k + 1])))
            continue
        n = max(1, int(round(n_steps * drop / cont)))
        grid = np.linspace(a, b, n + 1)
        vals = us[k] + (us[k + 1] - us[k]) * (0.5 * (grid[:-1] + grid[1:]) - a) / (b - a)
        cells.extend(zip(grid[:-1], grid[1:], vals))
    edges = []
    values = [us[0]]
    for a, _, v in cells:
        if v != values[-1]:
            edges.append(a)
            values.append(v)
    if us[-1] != values[-1]:
        edges.append(xs[-1])
        values.append(us[-1])
    return np.array(edges), np.array(values)


# named constructors for the background solutions ---------------------------


def make_flat(f, profile, x0=0.0, t0=0.0):
    """``f``-solution with the data on ``x < x0`` and ``+inf`` on ``x > x0``."""
    xs, us = profile.restrict(-np.inf, x0)
    return IncreasingEvolution.from_nodes(f, t0, xs, us, left_fan=False, right_fan=True)


def make_sharp_f(f, profile, x0=0.0, t0=0.0):
    """``f``-solution with ``-inf`` on ``x < x0`` and the data on ``x > x0``."""
    xs, us = profile.restrict(x0, np.inf)
    return IncreasingEvolution.from_nodes(f, t0, xs, us, left_fan=True, right_fan=False)


def make_natural(f, x0=0.0, t0=0.0):
    """The full centered ``f``-rarefaction through ``(t0, x0)``."""
    return IncreasingEvolution.fan(f, t0, x0)


def make_sharp_g(g, profile, x0=0.0, t0=0.0, n_steps=N_STEPS):
    """``g``-solution of the data on ``x > x0`` extended by its limit ``u(x0+)``."""
    xs, us = profile.restrict(x0, np.inf)
    return StaircaseEvolution.from_nodes(g, t0, xs, us, n_steps)


def make_g_left(g, profile, x0=0.0, u_minus=None, t0=0.0, n_steps=N_STEPS):
    """``g``-solution of the data on ``x < x0`` extended by ``u_minus = u(x0-)``."""
    xs, us = profile.restrict(-np.inf, x0)
    if u_minus is not None and abs(u_minus - us[-1]) > JUMP_REL_TOL * (1 + abs(u_minus)):
        xs = np.append(xs, xs[-1])
        us = np.append(us, u_minus)
    return StaircaseEvolution.from_nodes(g, t0, xs, us, n_steps)
