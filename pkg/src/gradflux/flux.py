"""Convex flux functions, the unstable flux pair f > g, and tangency states.

A flux is a convex polynomial restricted to a closed interval.  The pair
``(f, g)`` is checked by dense sampling at construction time: both second
derivatives must stay above a positive floor and ``f - g`` must stay
positive.
"""
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.polynomial import polyval

from .errors import DegenerateJump, NoConvergence, RootOutOfDomain, ValidationError

TANGENCY_TOL = 1e-10
JUMP_TOL = 1e-14
_N_SAMPLES = 4097


@dataclass(frozen=True)
class ConvexFlux:
    """Strictly convex polynomial flux on ``[u_lo, u_hi]``.

    ``coefficients`` are in increasing order (``c0 + c1 u + c2 u**2 + ...``).
    """

    coefficients: tuple
    domain: tuple = (-50.0, 50.0)
    name: str = "flux"
    convexity_floor: float = field(init=False)

    def __post_init__(self):
        coef = tuple(float(c) for c in self.coefficients)
        while len(coef) > 1 and coef[-1] == 0.0:
            coef = coef[:-1]
        object.__setattr__(self, "coefficients", coef)
        lo, hi = (float(v) for v in self.domain)
        if not lo < hi:
            raise ValidationError(f"{self.name}: empty domain [{lo}, {hi}]")
        object.__setattr__(self, "domain", (lo, hi))
        object.__setattr__(self, "_p", Polynomial(coef))
        object.__setattr__(self, "_dp", self._p.deriv())
        object.__setattr__(self, "_ddp", self._p.deriv(2))
        object.__setattr__(self, "_c0", np.array(self._p.coef))
        object.__setattr__(self, "_c1", np.array(self._dp.coef))
        object.__setattr__(self, "_c2", np.array(self._ddp.coef))
        u = np.linspace(lo, hi, _N_SAMPLES)
        floor = float(np.min(self._ddp(u))) if len(coef) > 2 else 0.0
        if not floor > 0.0:
            raise ValidationError(
                f"{self.name}: not strictly convex on [{lo}, {hi}] (min f'' = {floor:g})"
            )
        object.__setattr__(self, "convexity_floor", floor)

    @classmethod
    def quadratic(cls, offset=0.0, curvature=1.0, domain=(-50.0, 50.0), name="flux"):
        """``curvature * u**2 / 2 + offset``."""
        return cls((offset, 0.0, 0.5 * curvature), domain=domain, name=name)

    @property
    def is_quadratic(self):
        return len(self.coefficients) == 3

    def __call__(self, u):
        return polyval(u, self._c0)

    def eval(self, u):
        return polyval(u, self._c0)

    def deriv(self, u):
        return polyval(u, self._c1)

    def deriv2(self, u):
        return polyval(u, self._c2)

    @property
    def speed_range(self):
        lo, hi = self.domain
        return float(self._dp(lo)), float(self._dp(hi))

    def deriv_inv(self, speed):
        """Solve ``f'(w) = speed`` for ``w`` (vectorized).

        Speeds outside ``f'(domain)`` raise :class:`RootOutOfDomain`.
        """
        s = np.asarray(speed, dtype=float)
        smin, smax = self.speed_range
        if np.any(s < smin - 1e-12 * (1 + abs(smin))) or np.any(s > smax + 1e-12 * (1 + abs(smax))):
            raise RootOutOfDomain(
                f"{self.name}: characteristic speed outside [{smin:g}, {smax:g}]"
            )
        if self.is_quadratic:
            c1, c2 = self.coefficients[1], self.coefficients[2]
            return (s - c1) / (2.0 * c2)
        lo, hi = self.domain
        a = np.full(s.shape, lo)
        b = np.full(s.shape, hi)
        w = 0.5 * (a + b)
        for _ in range(200):
            r = self._dp(w) - s
            a = np.where(r < 0, w, a)
            b = np.where(r >= 0, w, b)
            step = w - r / self._ddp(w)
            inside = (step > a) & (step < b)
            w_new = np.where(inside, step, 0.5 * (a + b))
            if np.all(np.abs(w_new - w) <= 1e-15 * (1.0 + np.abs(w))):
                w = w_new
                break
            w = w_new
        return w

    def to_dict(self):
        return {"kind": "polynomial", "coefficients": list(self.coefficients)}


@dataclass(frozen=True)
class FluxPair:
    """The pair ``(f, g)`` used where ``u_x > 0`` and ``u_x < 0`` respectively."""

    f: ConvexFlux
    g: ConvexFlux
    gap_floor: float = field(init=False)

    def __post_init__(self):
        lo = max(self.f.domain[0], self.g.domain[0])
        hi = min(self.f.domain[1], self.g.domain[1])
        if not lo < hi:
            raise ValidationError("f and g have disjoint domains")
        u = np.linspace(lo, hi, _N_SAMPLES)
        gap = float(np.min(self.f(u) - self.g(u)))
        if not gap > 0.0:
            raise ValidationError(f"gap_floor: f - g must be positive, min is {gap:g}")
        object.__setattr__(self, "gap_floor", gap)

    @classmethod
    def quadratic(cls, gap=1.0, domain=(-50.0, 50.0)):
        """The model pair ``f = u**2/2 + gap``, ``g = u**2/2``."""
        return cls(
            ConvexFlux.quadratic(gap, domain=domain, name="f"),
            ConvexFlux.quadratic(0.0, domain=domain, name="g"),
        )

    @property
    def domain(self):
        return (max(self.f.domain[0], self.g.domain[0]), min(self.f.domain[1], self.g.domain[1]))

    def flux(self, u, theta):
        """Mixed flux ``theta f(u) + (1 - theta) g(u)``."""
        theta = np.asarray(theta)
        return np.where(theta == 1, self.f(u), self.g(u))

    def char_speed(self, u, theta):
        theta = np.asarray(theta)
        return np.where(theta == 1, self.f.deriv(u), self.g.deriv(u))

    def by_theta(self, theta):
        return self.f if theta == 1 else self.g

    def check_domain(self, *states):
        lo, hi = self.domain
        for u in states:
            if not lo <= u <= hi:
                raise RootOutOfDomain(f"state {u:g} outside domain [{lo:g}, {hi:g}]")


def secant_speed(pair, u_left, theta_left, u_right, theta_right):
    """Rankine-Hugoniot speed of a jump between ``(u_left, theta_left)`` and ``(u_right, theta_right)``."""
    du = u_right - u_left
    if abs(du) <= JUMP_TOL * (1.0 + abs(u_left) + abs(u_right)):
        raise DegenerateJump(f"u_left == u_right == {u_left:g}")
    fr = pair.by_theta(theta_right)(u_right)
    fl = pair.by_theta(theta_left)(u_left)
    return float((fr - fl) / du)


def _tangency(pair, anchor, direction):
    f, g = pair.f, pair.g
    lo, hi = pair.domain
    pair.check_domain(anchor)
    ga = float(g(anchor))

    def resid(w):
        return float(f.deriv(w) * (w - anchor) - (f(w) - ga))

    gap = float(f(anchor) - ga)
    h = max(np.sqrt(2.0 * gap / max(float(f.deriv2(anchor)), f.convexity_floor)), 1e-8)
    inner = anchor
    edge = hi if direction > 0 else lo
    while True:
        outer = anchor + direction * h
        if (outer - edge) * direction > 0:
            outer = edge
        if resid(outer) >= 0:
            break
        if outer == edge:
            raise RootOutOfDomain(
                f"tangency point from {anchor:g} lies outside [{lo:g}, {hi:g}]"
            )
        inner = outer
        h *= 2.0
    a, b = (inner, outer) if direction > 0 else (outer, inner)
    w = outer
    for _ in range(200):
        r = resid(w)
        if abs(r) <= 1e-15 * (1.0 + abs(float(f(w)))):
            break
        # resid is increasing in w for direction > 0 and decreasing otherwise
        if (r < 0) == (direction > 0):
            a = w
        else:
            b = w
        d = float(f.deriv2(w) * (w - anchor))
        step = w - r / d if d != 0 else 0.5 * (a + b)
        w = step if a < step < b else 0.5 * (a + b)
        if b - a <= 4e-16 * (1.0 + abs(w)):
            break
    r = resid(w)
    if abs(r) > TANGENCY_TOL * (1.0 + abs(float(f(w)))):
        raise NoConvergence(f"tangency residual {r:g} at {w:g}")
    return float(w)


def tangent_upper(pair, u_plus):
    """State ``u* > u_plus`` where the line through ``(u_plus, g(u_plus))`` touches ``f``."""
    return _tangency(pair, float(u_plus), +1)


def tangent_lower(pair, u_minus):
    """State ``v* < u_minus`` where the line through ``(u_minus, g(u_minus))`` touches ``f``."""
    return _tangency(pair, float(u_minus), -1)


def tangent_pair_from_point(pair, u_tilde):
    return tangent_lower(pair, u_tilde), tangent_upper(pair, u_tilde)


def tangency_residual(pair, anchor, w):
    return float(pair.f.deriv(w) * (w - anchor) - (pair.f(w) - pair.g(anchor)))
