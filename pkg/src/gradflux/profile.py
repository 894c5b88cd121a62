"""Piecewise monotone profiles, flux selector fields and interface sets."""
from dataclasses import dataclass, field

import numpy as np

from .errors import Incompatible, ValidationError

JUMP_REL_TOL = 1e-12


def _scale(values):
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    return 1.0 + (float(np.max(np.abs(v))) if v.size else 0.0)


@dataclass(frozen=True)
class Segment:
    """A monotone piece given by nodes, linearly interpolated."""

    xs: tuple
    us: tuple
    tag: str = field(default="", compare=False)

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        us = np.asarray(self.us, dtype=float)
        if xs.ndim != 1 or xs.size < 2 or xs.shape != us.shape:
            raise ValidationError("segment needs at least two (x, u) nodes")
        if np.any(np.diff(xs) <= 0):
            raise ValidationError("segment nodes must have strictly increasing x")
        if not np.all(np.isfinite(us)):
            raise ValidationError("segment values must be finite")
        d = np.diff(us)
        tol = JUMP_REL_TOL * _scale(us)
        if np.all(np.abs(d) <= tol):
            tag = "constant"
        elif np.all(d >= -tol):
            tag = "increasing"
        elif np.all(d <= tol):
            tag = "decreasing"
        else:
            raise ValidationError("segment is not monotone")
        if self.tag and self.tag != tag and tag != "constant":
            raise ValidationError(f"segment declared {self.tag} but is {tag}")
        object.__setattr__(self, "xs", tuple(xs))
        object.__setattr__(self, "us", tuple(us))
        object.__setattr__(self, "tag", tag)

    @classmethod
    def constant(cls, a, b, value):
        return cls((a, b), (value, value))

    @classmethod
    def affine(cls, a, b, u_a, u_b):
        return cls((a, b), (u_a, u_b))

    @classmethod
    def table(cls, xs, us):
        return cls(tuple(xs), tuple(us))

    @property
    def a(self):
        return self.xs[0]

    @property
    def b(self):
        return self.xs[-1]


@dataclass(frozen=True)
class PiecewiseMonotoneProfile:
    """``u(x)`` stored as contiguous monotone segments plus constant end states.

    ``left_state`` is the value on ``(-inf, x_0)`` and ``right_state`` the value
    on ``(x_m, inf)``.  Either may be ``-inf``/``+inf`` (an extended end state).
    """

    segments: tuple = ()
    left_state: float = None
    right_state: float = None

    def __post_init__(self):
        segs = tuple(self.segments)
        for s0, s1 in zip(segs, segs[1:]):
            if s0.b != s1.a:
                raise ValidationError(f"segments not contiguous at {s0.b} / {s1.a}")
        left = self.left_state
        right = self.right_state
        if left is None:
            left = segs[0].us[0] if segs else 0.0
        if right is None:
            right = segs[-1].us[-1] if segs else left
        if not segs and left != right:
            raise ValidationError("a profile without segments must be constant")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "left_state", float(left))
        object.__setattr__(self, "right_state", float(right))

    @classmethod
    def constant(cls, value):
        return cls((), value, value)

    @classmethod
    def riemann(cls, x0, u_left, u_right):
        if u_left == u_right:
            return cls.constant(u_left)
        return cls((Segment.constant(x0, x0 + 1.0, u_right),), u_left, u_right)

    @property
    def breakpoints(self):
        if not self.segments:
            return np.array([])
        return np.array([s.a for s in self.segments] + [self.segments[-1].b])

    def nodes(self):
        """Completed graph as node arrays; equal consecutive x encode a jump."""
        if not self.segments:
            return np.array([0.0]), np.array([self.left_state])
        xs = [self.segments[0].a]
        us = [self.left_state]
        for s in self.segments:
            for x, u in zip(s.xs, s.us):
                if x == xs[-1] and u == us[-1]:
                    continue
                xs.append(x)
                us.append(u)
        if self.right_state != us[-1]:
            xs.append(xs[-1])
            us.append(self.right_state)
        return np.array(xs), np.array(us)

    def value(self, x, side="+"):
        """Point values with the one-sided convention ``side`` at jumps."""
        nx, nu = self.nodes()
        x = np.asarray(x, dtype=float)
        return _eval_nodes(nx, nu, x, side)

    def limits(self, x):
        return float(self.value(x, "-")), float(self.value(x, "+"))

    def restrict(self, a, b):
        """Nodes of the completed graph on ``(a, b)`` with one-sided end limits."""
        return restrict_nodes(*self.nodes(), a, b)

    def total_variation(self):
        _, nu = self.nodes()
        nu = nu[np.isfinite(nu)]
        return float(np.sum(np.abs(np.diff(nu))))

    @property
    def scale(self):
        return _scale(self.nodes()[1])


def _eval_nodes(nx, nu, x, side):
    x = np.asarray(x, dtype=float)
    if nx.size == 1:
        return np.full(x.shape, float(nu[0]))
    # at a duplicated node (a jump) "right" picks the last copy, "left" the first
    k = np.searchsorted(nx, x, side="right" if side == "+" else "left") - 1
    out = np.empty(x.shape, dtype=float)
    left = k < 0
    right = k >= nx.size - 1
    mid = ~(left | right)
    out[left] = nu[0]
    out[right] = nu[-1]
    km = k[mid]
    x0, x1 = nx[km], nx[km + 1]
    u0, u1 = nu[km], nu[km + 1]
    dx = np.where(x1 > x0, x1 - x0, 1.0)
    w = np.where(x1 > x0, (x[mid] - x0) / dx, 0.0)
    out[mid] = u0 + w * (u1 - u0)
    return out


def restrict_nodes(nx, nu, a, b):
    """Clip a completed graph to the open interval ``(a, b)``.

    The first node is ``(a, u(a+))`` when ``a`` is finite and the last node is
    ``(b, u(b-))`` when ``b`` is finite.  An unbounded end keeps the outermost
    node, whose value extends to infinity.
    """
    a = float(a)
    b = float(b)
    if not np.isfinite(a) and not np.isfinite(b):
        return np.asarray(nx, float).copy(), np.asarray(nu, float).copy()
    inside = (nx > a) & (nx < b)
    xs = list(nx[inside])
    us = list(nu[inside])
    if np.isfinite(a):
        xs.insert(0, a)
        us.insert(0, float(_eval_nodes(nx, nu, np.array([a]), "+")[0]))
    if np.isfinite(b):
        xs.append(b)
        us.append(float(_eval_nodes(nx, nu, np.array([b]), "-")[0]))
    return np.array(xs, dtype=float), np.array(us, dtype=float)


@dataclass(frozen=True)
class ThetaField:
    """Piecewise constant ``{0, 1}`` field given by its leftmost value and jumps."""

    left_value: int
    jumps: tuple = ()

    def __post_init__(self):
        if self.left_value not in (0, 1):
            raise ValidationError("theta values must be 0 or 1")
        j = tuple(float(v) for v in self.jumps)
        if any(b <= a for a, b in zip(j, j[1:])):
            raise ValidationError("theta jumps must be strictly increasing")
        object.__setattr__(self, "jumps", j)

    @classmethod
    def constant(cls, value):
        return cls(int(value), ())

    @property
    def values(self):
        return tuple((self.left_value + k) % 2 for k in range(len(self.jumps) + 1))

    def value(self, x, side="+"):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(np.array(self.jumps), x, side="right" if side == "+" else "left")
        return (self.left_value + k) % 2


@dataclass(frozen=True)
class Interface:
    position: float
    theta_left: int
    theta_right: int
    u_left: float
    u_right: float


@dataclass(frozen=True)
class InterfaceSet:
    """Ordered interface positions with the theta value of each region between them.

    ``region_thetas[k]`` is theta on ``(y_k, y_{k+1})`` with ``y_0 = -inf``.
    Coincident positions describe a zero-width region (a spike seed).
    """

    positions: tuple = ()
    region_thetas: tuple = None

    def __post_init__(self):
        p = tuple(float(v) for v in self.positions)
        if any(b < a for a, b in zip(p, p[1:])):
            raise ValidationError("interface positions must be non-decreasing")
        th = self.region_thetas
        if th is not None:
            th = tuple(int(v) for v in th)
            if len(th) != len(p) + 1:
                raise ValidationError("need one theta value per region")
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "region_thetas", th)

    def __len__(self):
        return len(self.positions)

    def with_thetas(self, theta):
        """Fill region thetas from a :class:`ThetaField` (positive-width regions only)."""
        if self.region_thetas is not None:
            return self
        edges = [-np.inf, *self.positions, np.inf]
        th = []
        for a, b in zip(edges, edges[1:]):
            if a == b:
                raise ValidationError("zero-width regions need explicit region_thetas")
            th.append(int(theta.value(b, "-") if np.isfinite(b) else theta.value(a, "+")))
        return InterfaceSet(self.positions, tuple(th))

    def interfaces(self, profile):
        th = self.region_thetas
        out = []
        for k, y in enumerate(self.positions):
            um, up = profile.limits(y)
            out.append(Interface(y, th[k], th[k + 1], um, up))
        return out


def _midpoint(a, b):
    if np.isfinite(a) and np.isfinite(b):
        return 0.5 * (a + b)
    if np.isfinite(a):
        return a + 1.0
    if np.isfinite(b):
        return b - 1.0
    return 0.0


@dataclass
class CompatibilityReport:
    ok: bool
    reason: str = ""
    location: float = None

    def __bool__(self):
        return self.ok


def _monotone_on(profile, a, b, increasing):
    nx, nu = profile.restrict(a, b)
    d = np.diff(nu)
    tol = JUMP_REL_TOL * profile.scale
    bad = d < -tol if increasing else d > tol
    if np.any(bad):
        return False, float(nx[int(np.argmax(bad)) + 1])
    return True, None


def validate_compatibility(u, theta, faces):
    """Check the interface-set conditions for ``(u, theta)``."""
    faces = faces.with_thetas(theta)
    pos = np.array(faces.positions)
    for j in theta.jumps:
        if not np.any(np.abs(pos - j) <= 1e-12 * (1.0 + abs(j))):
            return CompatibilityReport(False, "theta jump not in interface set", j)
    edges = [-np.inf, *faces.positions, np.inf]
    for k, (a, b) in enumerate(zip(edges, edges[1:])):
        if a == b:
            continue
        th = faces.region_thetas[k]
        inner = [j for j in theta.jumps if a < j < b]
        if inner:
            return CompatibilityReport(False, "theta jump inside a region", inner[0])
        # no jump inside, so a one-sided limit at an edge is the region's value
        probe = float(theta.value(b, "-")) if np.isfinite(b) else float(theta.value(a, "+"))
        if int(probe) != th:
            return CompatibilityReport(False, "region theta disagrees with theta field", _midpoint(a, b))
        ok, where = _monotone_on(u, a, b, increasing=(th == 1))
        if not ok:
            word = "non-decreasing" if th == 1 else "non-increasing"
            return CompatibilityReport(False, f"u is not {word} where theta={th}", where)
    return CompatibilityReport(True)


def minimal_interface_set(u, theta):
    """Smallest interface set: theta jumps plus downward u-jumps inside theta=1 stretches."""
    positions = set(theta.jumps)
    nx, nu = u.nodes()
    tol = JUMP_REL_TOL * u.scale
    for k in range(nx.size - 1):
        if nx[k] == nx[k + 1] and nu[k + 1] < nu[k] - tol:
            x = float(nx[k])
            if theta.value(x, "-") == 1 and theta.value(x, "+") == 1:
                positions.add(x)
    faces = InterfaceSet(tuple(sorted(positions))).with_thetas(theta)
    report = validate_compatibility(u, theta, faces)
    if not report:
        raise Incompatible(f"{report.reason} at x={report.location}")
    return faces


def minimal_interface_count(u, theta):
    return len(minimal_interface_set(u, theta))
