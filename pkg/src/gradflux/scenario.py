"""JSON scenario files: parsing with defaults, validation and re-emission."""
import copy
import json
from dataclasses import dataclass

from .cauchy import CauchyProblem
from .errors import GradFluxError, Incompatible, ParseError, ValidationError
from .flux import ConvexFlux, FluxPair
from .profile import InterfaceSet, PiecewiseMonotoneProfile, Segment, ThetaField
from .riemann import solve_riemann

# None marks a required key; nested dicts are schemas in their own right.
_FLUX = {
    "quadratic": {"kind": "quadratic", "gap": 1.0, "domain": [-50.0, 50.0]},
    "polynomial": {"kind": "polynomial", "f": None, "g": None, "domain": [-50.0, 50.0]},
}
_INITIAL = {
    "riemann": {
        "kind": "riemann", "u_minus": None, "u_plus": None,
        "theta_minus": None, "theta_plus": None, "x0": 0.0,
    },
    "profile": {
        "kind": "profile", "segments": [], "left_state": None, "right_state": None,
        "theta_left": 0, "theta_jumps": [], "interfaces": None,
    },
}
_OPTIONAL = {"left_state", "right_state", "interfaces"}
_SOLVER = {"n_steps": 256, "tolerance": 1e-12}
_SPIKE = {"tau": None, "x": None, "kind": "pair"}
_OUTPUT = {"snapshot_times": None, "grid": 1001, "x_range": None, "trajectory": True, "validate": False}
_TOP = {"flux", "initial", "horizon", "t0", "solver", "spike", "output", "seed"}


def _fail(path, msg):
    raise ParseError(f"{'.'.join(path) or '<root>'}: {msg}")


def _fill(obj, schema, path, optional=()):
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    for k in obj:
        if k not in schema:
            _fail(path + [k], "unknown key")
    out = {}
    for k, default in schema.items():
        if k in obj:
            out[k] = obj[k]
        elif default is None and k not in optional:
            _fail(path + [k], "missing required key")
        else:
            out[k] = copy.deepcopy(default)
    return out


def _number(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(path, f"expected a number, got {v!r}")
    return float(v)


def _numbers(v, path):
    if not isinstance(v, list):
        _fail(path, "expected a list of numbers")
    return [_number(x, path + [str(i)]) for i, x in enumerate(v)]


def _theta(v, path):
    if v not in (0, 1) or isinstance(v, bool):
        _fail(path, f"theta must be 0 or 1, got {v!r}")
    return int(v)


def _kinded(obj, table, path):
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    kind = obj.get("kind")
    if kind not in table:
        _fail(path + ["kind"], f"expected one of {sorted(table)}, got {kind!r}")
    return _fill(obj, table[kind], path, _OPTIONAL)


def _materialize(raw):
    if not isinstance(raw, dict):
        _fail([], "expected an object")
    for k in raw:
        if k not in _TOP:
            _fail([k], "unknown key")
    for k in ("flux", "initial"):
        if k not in raw:
            _fail([k], "missing required key")
    d = {}
    fl = _kinded(raw["flux"], _FLUX, ["flux"])
    fl["domain"] = _numbers(fl["domain"], ["flux", "domain"])
    if len(fl["domain"]) != 2:
        _fail(["flux", "domain"], "expected [lo, hi]")
    if fl["kind"] == "quadratic":
        fl["gap"] = _number(fl["gap"], ["flux", "gap"])
    else:
        fl["f"] = _numbers(fl["f"], ["flux", "f"])
        fl["g"] = _numbers(fl["g"], ["flux", "g"])
    d["flux"] = fl

    ini = _kinded(raw["initial"], _INITIAL, ["initial"])
    p = ["initial"]
    if ini["kind"] == "riemann":
        for k in ("u_minus", "u_plus", "x0"):
            ini[k] = _number(ini[k], p + [k])
        for k in ("theta_minus", "theta_plus"):
            ini[k] = _theta(ini[k], p + [k])
    else:
        segs = []
        if not isinstance(ini["segments"], list):
            _fail(p + ["segments"], "expected a list")
        for i, s in enumerate(ini["segments"]):
            q = p + ["segments", str(i)]
            s = _fill(s, {"x": None, "u": None}, q)
            segs.append({"x": _numbers(s["x"], q + ["x"]), "u": _numbers(s["u"], q + ["u"])})
        ini["segments"] = segs
        for k in ("left_state", "right_state"):
            if ini[k] is not None:
                ini[k] = _number(ini[k], p + [k])
        ini["theta_left"] = _theta(ini["theta_left"], p + ["theta_left"])
        ini["theta_jumps"] = _numbers(ini["theta_jumps"], p + ["theta_jumps"])
        if ini["interfaces"] is not None:
            q = p + ["interfaces"]
            f = _fill(ini["interfaces"], {"positions": [], "region_thetas": None}, q, {"region_thetas"})
            f["positions"] = _numbers(f["positions"], q + ["positions"])
            if f["region_thetas"] is not None:
                if not isinstance(f["region_thetas"], list):
                    _fail(q + ["region_thetas"], "expected a list")
                f["region_thetas"] = [_theta(v, q + ["region_thetas"]) for v in f["region_thetas"]]
            ini["interfaces"] = f
    d["initial"] = ini

    d["t0"] = _number(raw.get("t0", 0.0), ["t0"])
    d["horizon"] = _number(raw.get("horizon", 1.0), ["horizon"])
    sv = _fill(raw.get("solver", {}), _SOLVER, ["solver"])
    if isinstance(sv["n_steps"], bool) or not isinstance(sv["n_steps"], int) or sv["n_steps"] < 1:
        _fail(["solver", "n_steps"], "expected a positive integer")
    sv["tolerance"] = _number(sv["tolerance"], ["solver", "tolerance"])
    d["solver"] = sv

    sp = raw.get("spike")
    if sp is not None:
        sp = _fill(sp, _SPIKE, ["spike"])
        sp["tau"] = _number(sp["tau"], ["spike", "tau"])
        sp["x"] = _number(sp["x"], ["spike", "x"])
        if sp["kind"] not in ("pair", "max", "min"):
            _fail(["spike", "kind"], f"expected pair, max or min, got {sp['kind']!r}")
    d["spike"] = sp

    out = _fill(raw.get("output", {}), _OUTPUT, ["output"], {"snapshot_times", "x_range"})
    times = out["snapshot_times"]
    out["snapshot_times"] = [d["horizon"]] if times is None else _numbers(times, ["output", "snapshot_times"])
    if isinstance(out["grid"], bool) or not isinstance(out["grid"], int) or out["grid"] < 2:
        _fail(["output", "grid"], "expected an integer >= 2")
    if out["x_range"] is not None:
        out["x_range"] = _numbers(out["x_range"], ["output", "x_range"])
        if len(out["x_range"]) != 2:
            _fail(["output", "x_range"], "expected [lo, hi]")
    for k in ("trajectory", "validate"):
        if not isinstance(out[k], bool):
            _fail(["output", k], "expected true or false")
    d["output"] = out

    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        _fail(["seed"], "expected an integer")
    d["seed"] = seed
    return d


def _build_pair(fl):
    dom = tuple(fl["domain"])
    if fl["kind"] == "quadratic":
        return FluxPair.quadratic(fl["gap"], domain=dom)
    return FluxPair(ConvexFlux(fl["f"], dom, "f"), ConvexFlux(fl["g"], dom, "g"))


@dataclass
class Scenario:
    """A validated scenario; ``data`` is the materialized key tree."""

    data: dict
    pair: FluxPair
    problem: CauchyProblem

    @property
    def is_riemann(self):
        return self.data["initial"]["kind"] == "riemann"

    def riemann_fan(self):
        ini = self.data["initial"]
        return solve_riemann(self.pair, ini["u_minus"], ini["u_plus"], ini["theta_minus"], ini["theta_plus"])

    @property
    def output(self):
        return self.data["output"]

    def override(self, **kw):
        """A new scenario with CLI flag overrides applied (``None`` leaves a value)."""
        d = copy.deepcopy(self.data)
        if kw.get("snapshot_times") is not None:
            d["output"]["snapshot_times"] = list(kw["snapshot_times"])
        if kw.get("grid") is not None:
            d["output"]["grid"] = int(kw["grid"])
        if kw.get("tolerance") is not None:
            d["solver"]["tolerance"] = float(kw["tolerance"])
        if kw.get("seed") is not None:
            d["seed"] = int(kw["seed"])
        if kw.get("validate"):
            d["output"]["validate"] = True
        return parse_scenario(emit_scenario_data(d))


def _build(d):
    try:
        pair = _build_pair(d["flux"])
        ini = d["initial"]
        kw = dict(horizon=d["horizon"], t0=d["t0"], n_steps=d["solver"]["n_steps"],
                  rtol=d["solver"]["tolerance"])
        if ini["kind"] == "riemann":
            prob = CauchyProblem.riemann(pair, ini["u_minus"], ini["u_plus"], ini["theta_minus"],
                                         ini["theta_plus"], x0=ini["x0"], **kw)
        else:
            segs = tuple(Segment.table(s["x"], s["u"]) for s in ini["segments"])
            u = PiecewiseMonotoneProfile(segs, ini["left_state"], ini["right_state"])
            theta = ThetaField(ini["theta_left"], tuple(ini["theta_jumps"]))
            faces = None
            if ini["interfaces"] is not None:
                f = ini["interfaces"]
                th = None if f["region_thetas"] is None else tuple(f["region_thetas"])
                faces = InterfaceSet(tuple(f["positions"]), th)
            prob = CauchyProblem(pair, u, theta, interfaces=faces, **kw)
    except Incompatible as exc:
        raise ValidationError(f"incompatible (u, theta, interfaces): {exc}") from exc
    except ValidationError:
        raise
    except (GradFluxError, ValueError) as exc:
        raise ValidationError(str(exc)) from exc
    return Scenario(d, pair, prob)


def parse_scenario(text):
    """Parse scenario JSON; unknown keys are rejected and defaults filled in."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    if not text.strip():
        raise ParseError("line 1: empty scenario")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}: {exc.msg}") from exc
    return _build(_materialize(raw))


def emit_scenario_data(data):
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def emit_scenario(scenario):
    """Canonical text of the materialized scenario."""
    return emit_scenario_data(scenario.data)
