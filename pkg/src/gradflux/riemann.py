"""Self-similar Riemann solutions of the mixed-flux problem."""
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainExceeded, RootOutOfDomain
from .evolution import Front
from .flux import JUMP_TOL, tangent_lower, tangent_upper

Jump = namedtuple("Jump", "x u_left u_right theta_left theta_right speed")

SHOCK = "shock"
INTERFACE_SHOCK = "interface-shock"
RAREFACTION = "f-rarefaction"


@dataclass(frozen=True)
class Wave:
    """A shock (``xi_lo == xi_hi``) or an ``f``-rarefaction sector."""

    kind: str
    xi_lo: float
    xi_hi: float
    u_left: float
    u_right: float
    theta_left: int
    theta_right: int

    @property
    def is_interface(self):
        return self.kind == INTERFACE_SHOCK

    @property
    def speed(self):
        return self.xi_lo


@dataclass(frozen=True)
class WaveFan:
    u_minus: float
    u_plus: float
    theta_minus: int
    theta_plus: int
    waves: tuple = ()
    case: str = ""
    pair: object = field(default=None, compare=False, repr=False)

    @property
    def interface_count(self):
        return sum(w.is_interface for w in self.waves)

    @property
    def shocks(self):
        return [w for w in self.waves if w.kind != RAREFACTION]

    def sectors(self):
        """Ordered ``(kind, xi_lo, xi_hi, u_lo, u_hi, theta)`` sectors incl. constants."""
        out = []
        xi = -np.inf
        u, th = self.u_minus, self.theta_minus
        for w in self.waves:
            if w.xi_lo > xi:
                out.append(("constant", xi, w.xi_lo, u, u, th))
            if w.kind == RAREFACTION:
                out.append((w.kind, w.xi_lo, w.xi_hi, w.u_left, w.u_right, 1))
            else:
                out.append((w.kind, w.xi_lo, w.xi_hi, w.u_left, w.u_right, w.theta_right))
            xi = w.xi_hi
            u, th = w.u_right, w.theta_right
        out.append(("constant", xi, np.inf, u, u, th))
        return out

    def to_dict(self):
        return {
            "case": self.case,
            "u_minus": self.u_minus,
            "u_plus": self.u_plus,
            "theta_minus": self.theta_minus,
            "theta_plus": self.theta_plus,
            "interface_count": self.interface_count,
            "waves": [
                {
                    "kind": w.kind,
                    "xi_lo": w.xi_lo,
                    "xi_hi": w.xi_hi,
                    "u_left": w.u_left,
                    "u_right": w.u_right,
                    "theta_left": w.theta_left,
                    "theta_right": w.theta_right,
                }
                for w in self.waves
            ],
        }


def _shock(pair, ul, thl, ur, thr, speed=None):
    if speed is None:
        fl = pair.by_theta(thl)(ul)
        fr = pair.by_theta(thr)(ur)
        speed = float((fr - fl) / (ur - ul))
    interface = thl != thr or (thl == 1 and ul > ur)
    return Wave(INTERFACE_SHOCK if interface else SHOCK, speed, speed, ul, ur, thl, thr)


def _fan(pair, ul, ur):
    f = pair.f
    return Wave(RAREFACTION, float(f.deriv(ul)), float(f.deriv(ur)), ul, ur, 1, 1)


def _tangents(pair, u_minus=None, u_plus=None):
    try:
        v = tangent_lower(pair, u_minus) if u_minus is not None else None
        w = tangent_upper(pair, u_plus) if u_plus is not None else None
    except RootOutOfDomain as exc:
        raise DomainExceeded(str(exc)) from exc
    return v, w


def _two_interface_fan(pair, um, up, v_star, u_star, case):
    f = pair.f
    waves = (
        _shock(pair, um, 0, v_star, 1, float(f.deriv(v_star))),
        _fan(pair, v_star, u_star),
        _shock(pair, u_star, 1, up, 0, float(f.deriv(u_star))),
    )
    return WaveFan(um, up, 0, 0, waves, case, pair)


def solve_riemann(pair, u_minus, u_plus, theta_minus, theta_plus):
    """Admissible fan with the fewest interfaces for Riemann data."""
    um, up = float(u_minus), float(u_plus)
    thm, thp = int(theta_minus), int(theta_plus)
    pair.check_domain(um, up)
    f = pair.f
    # differences below roundoff carry no wave
    same = abs(um - up) <= JUMP_TOL * (1.0 + abs(um) + abs(up))
    if thm == 1 and thp == 1:
        if same:
            return WaveFan(um, up, 1, 1, (), "1", pair)
        if um < up:
            return WaveFan(um, up, 1, 1, (_fan(pair, um, up),), "1", pair)
        return WaveFan(um, up, 1, 1, (_shock(pair, um, 1, up, 1),), "1", pair)
    if thm == 1 and thp == 0:
        _, u_star = _tangents(pair, u_plus=up)
        if um >= u_star:
            return WaveFan(um, up, 1, 0, (_shock(pair, um, 1, up, 0),), "2A", pair)
        waves = (_fan(pair, um, u_star), _shock(pair, u_star, 1, up, 0, float(f.deriv(u_star))))
        return WaveFan(um, up, 1, 0, waves, "2B", pair)
    if thm == 0 and thp == 1:
        v_star, _ = _tangents(pair, u_minus=um)
        if up <= v_star:
            return WaveFan(um, up, 0, 1, (_shock(pair, um, 0, up, 1),), "3A", pair)
        waves = (_shock(pair, um, 0, v_star, 1, float(f.deriv(v_star))), _fan(pair, v_star, up))
        return WaveFan(um, up, 0, 1, waves, "3B", pair)
    if um >= up or same:
        waves = () if same else (_shock(pair, um, 0, up, 0),)
        return WaveFan(um, up, 0, 0, waves, "4A", pair)
    v_star, u_star = _tangents(pair, um, up)
    return _two_interface_fan(pair, um, up, v_star, u_star, "4B")


def enumerate_admissible_alternatives(pair, u_minus, u_plus, theta_minus, theta_plus):
    """All admissible fans among the constructions; twins exist only for 0|0 downward jumps."""
    first = solve_riemann(pair, u_minus, u_plus, theta_minus, theta_plus)
    if not (int(theta_minus) == 0 and int(theta_plus) == 0 and u_minus > u_plus):
        return [first]
    try:
        v_star, u_star = _tangents(pair, float(u_minus), float(u_plus))
    except DomainExceeded:
        return [first]
    if not v_star < u_star:
        return [first]
    return [first, _two_interface_fan(pair, float(u_minus), float(u_plus), v_star, u_star, "4A-twin")]


def eval_fan(fan, t, x):
    """``(u, theta)`` at ``(t, x)``; a shock slope yields the right state."""
    xi = np.asarray(x, dtype=float) / np.asarray(t, dtype=float)
    return _eval_xi(fan, xi, "+")


def _eval_xi(fan, xi, side):
    xi = np.asarray(xi, dtype=float)
    u = np.full(xi.shape, fan.u_minus, dtype=float)
    th = np.full(xi.shape, fan.theta_minus, dtype=int)
    for w in fan.waves:
        past = xi >= w.xi_hi if side == "+" or w.kind == RAREFACTION else xi > w.xi_hi
        u = np.where(past, w.u_right, u)
        th = np.where(past, w.theta_right, th)
        if w.kind == RAREFACTION:
            inside = (xi > w.xi_lo) & (xi < w.xi_hi)
            if np.any(inside):
                u = np.where(inside, fan.pair.f.deriv_inv(np.where(inside, xi, w.xi_lo)), u)
                th = np.where(inside, 1, th)
    return u, th


class FanSolution:
    """A Riemann fan centered at ``(t0, x0)`` exposed through the timeline interface."""

    def __init__(self, fan, x0=0.0, t0=0.0, horizon=1.0):
        self.fan = fan
        self.pair = fan.pair
        self.x0 = float(x0)
        self.t0 = float(t0)
        self.t_start = self.t0
        self.horizon = float(horizon)
        self.epoch_bounds = [(self.t0, self.horizon)]

        self._edges = np.array(sorted({e for w in fan.waves for e in (w.xi_lo, w.xi_hi)}))

    def _xi(self, t, x):
        dx = np.asarray(x, dtype=float) - self.x0
        dt = np.asarray(t, dtype=float) - self.t0
        if np.any(dt <= 0):
            # the initial step, right-continuous at x0
            return np.where(dt <= 0, np.where(dx >= 0, np.inf, -np.inf), dx / np.where(dt > 0, dt, 1.0))
        xi = dx / dt
        # breakpoints computed as x0 + s*dt should map back onto s exactly
        for e in self._edges:
            xi = np.where(np.abs(xi - e) <= 8 * np.finfo(float).eps * max(1.0, abs(e)), e, xi)
        return xi

    def query(self, t, x, side="+"):
        return _eval_xi(self.fan, self._xi(t, x), side)[0]

    def theta(self, t, x, side="+"):
        return _eval_xi(self.fan, self._xi(t, x), side)[1]

    def jumps(self, t):
        dt = float(t) - self.t0
        return [
            Jump(self.x0 + w.speed * dt, w.u_left, w.u_right, w.theta_left, w.theta_right, w.speed)
            for w in self.fan.shocks
        ]

    def breakpoints(self, t):
        dt = float(t) - self.t0
        xs = set()
        for w in self.fan.waves:
            xs.add(self.x0 + w.xi_lo * dt)
            xs.add(self.x0 + w.xi_hi * dt)
        return np.array(sorted(xs))

    def interface_positions(self, t):
        dt = float(t) - self.t0
        return np.array([self.x0 + w.speed * dt for w in self.fan.waves if w.is_interface])

    def fronts(self, t1, t2):
        out = []
        for w in self.fan.waves:
            kind = "kink" if w.kind == RAREFACTION else "jump"
            for s in {w.xi_lo, w.xi_hi}:
                out.append(Front(t1, self.x0 + s * (t1 - self.t0), s, t2, kind))
        return out

    def edge_crossings(self, x, t1, t2):
        out = []
        for w in self.fan.waves:
            for s in {w.xi_lo, w.xi_hi}:
                if s != 0:
                    tc = self.t0 + (x - self.x0) / s
                    if t1 < tc < t2:
                        out.append(tc)
        return np.unique(np.array(out, dtype=float))
