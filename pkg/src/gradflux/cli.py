"""Command-line entry point: ``gradflux <subcommand> --scenario file.json``."""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import acceptance
from .artifacts import (
    default_x_range, emit_json, emit_restart_log, emit_snapshot, emit_trajectory, fmt,
    parse_snapshot, snapshot_grid,
)
from .cauchy import inject_spike, interface_problems, solve
from .errors import GradFluxError, ValidationError
from .interface_ode import default_grid, picard_solve, step_integrate, weighted_distance
from .riemann import FanSolution
from .scenario import emit_scenario, parse_scenario
from .validate import validate_timeline

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
SNAPSHOT_TOL = 1e-9


def _times(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad time list {text!r}") from exc


def build_parser():
    p = argparse.ArgumentParser(prog="gradflux", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("riemann", "exact Riemann fan plus snapshots"),
        ("cauchy", "piecewise monotone Cauchy problem"),
        ("interface", "interface ODEs by stepping and Picard iteration"),
        ("spike", "solve, inject a spike, solve again"),
        ("validate", "certify a scenario and check snapshot files against a recomputation"),
        ("selftest", "run the acceptance battery"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--scenario", type=Path, required=name != "selftest")
        sp.add_argument("--out", type=Path)
        sp.add_argument("--snapshot-times", type=_times)
        sp.add_argument("--grid", type=int)
        sp.add_argument("--tolerance", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--validate", action="store_true")
        if name == "validate":
            sp.add_argument("snapshots", nargs="*", type=Path, help="snapshot CSV files to recheck")
    return p


class _Sink:
    """Writes artifacts under ``--out`` (if given) and echoes summaries to stdout."""

    def __init__(self, out):
        self.out = out
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)

    def write(self, name, text):
        if self.out is not None:
            (self.out / name).write_text(text, encoding="utf-8")

    def say(self, line):
        print(line)


def _load(args):
    sc = parse_scenario(args.scenario.read_text(encoding="utf-8"))
    # for validate, --tolerance is the snapshot comparison tolerance instead
    tol = None if args.command == "validate" else args.tolerance
    return sc.override(snapshot_times=args.snapshot_times, grid=args.grid, tolerance=tol,
                       seed=args.seed, validate=args.validate)


def _grid(sc, timeline):
    out = sc.output
    lo, hi = out["x_range"] or default_x_range(timeline, out["snapshot_times"])
    return snapshot_grid(lo, hi, out["grid"])


def _snapshots(sink, sc, timeline):
    grid = _grid(sc, timeline)
    for k, t in enumerate(sc.output["snapshot_times"]):
        sink.write(f"snapshot_{k:03d}.csv", emit_snapshot(timeline, t, grid))


def _report(sink, sc, timeline):
    if not sc.output["validate"]:
        return EXIT_OK
    rep = validate_timeline(timeline, seed=sc.data["seed"])
    sink.write("report.json", rep.to_json() + "\n")
    for line in rep.summary_lines():
        sink.say(line)
    return EXIT_OK if rep.ok else EXIT_FAIL


def _emit_timeline(sink, sc, timeline):
    sink.write("scenario.json", emit_scenario(sc))
    _snapshots(sink, sc, timeline)
    if sc.output["trajectory"]:
        for e, i, rows in timeline.trajectory_rows():
            sink.write(f"trajectory_e{e:02d}_i{i:02d}.csv", emit_trajectory(rows))
    sink.write("restarts.log", emit_restart_log(timeline))
    T = timeline.horizon
    sink.say(f"epochs={len(timeline.epochs)} restarts={len(timeline.restart_log)} "
             f"interfaces_at_horizon={timeline.interface_count(T)}")
    for x in timeline.interface_positions(T):
        sink.say(f"interface y({fmt(T)}) = {fmt(x)}")
    return _report(sink, sc, timeline)


def _fan_timeline(sc):
    ini = sc.data["initial"]
    return FanSolution(sc.riemann_fan(), ini["x0"], sc.data["t0"], sc.data["horizon"])


def cmd_riemann(args, sink):
    sc = _load(args)
    if not sc.is_riemann:
        raise ValidationError("the riemann subcommand needs an initial block of kind 'riemann'")
    fan = sc.riemann_fan()
    sink.write("scenario.json", emit_scenario(sc))
    sink.write("fan.json", emit_json(fan.to_dict()))
    sink.say(f"case {fan.case}, {fan.interface_count} interface(s)")
    for w in fan.waves:
        if w.xi_lo == w.xi_hi:
            sink.say(f"{w.kind} speed {fmt(w.speed)}  {fmt(w.u_left)} -> {fmt(w.u_right)}")
        else:
            sink.say(f"{w.kind} on [{fmt(w.xi_lo)}, {fmt(w.xi_hi)}]")
    fs = _fan_timeline(sc)
    _snapshots(sink, sc, fs)
    return _report(sink, sc, fs)


def cmd_cauchy(args, sink):
    sc = _load(args)
    return _emit_timeline(sink, sc, solve(sc.problem))


def cmd_spike(args, sink):
    sc = _load(args)
    sp = sc.data["spike"]
    if sp is None:
        raise ValidationError("the spike subcommand needs a 'spike' block")
    base = solve(sc.problem)
    tl = solve(inject_spike(base, sp["tau"], sp["x"], kind=sp["kind"]))
    sink.say(f"spike {sp['kind']} at x={fmt(sp['x'])}, t={fmt(sp['tau'])}")
    return _emit_timeline(sink, sc, tl)


def cmd_interface(args, sink):
    sc = _load(args)
    T = sc.data["horizon"]
    rtol = sc.data["solver"]["tolerance"]
    summary = []
    for i, pr in enumerate(interface_problems(sc.problem)):
        st = step_integrate(pr, T, rtol=rtol, partial=True)
        row = {"interface": i, "y0": pr.y_start, "step_t_end": st.t_end, "step_y_end": float(st(st.t_end))}
        sink.write(f"interface_{i:02d}_step.csv", emit_trajectory(st.rows()))
        try:
            pc = picard_solve(pr, st.t_end, tube=False)
        except GradFluxError as exc:
            row["picard_error"] = exc.code
        else:
            t_end = min(st.t_end, pc.t_end)
            row.update(picard_t_end=pc.t_end, picard_iterations=pc.iterations,
                       weighted_distance=weighted_distance(st, pc, default_grid(pr.t_start, t_end),
                                                           pr.t_start))
            sink.write(f"interface_{i:02d}_picard.csv", emit_trajectory(pc.rows()))
        if st.failure is not None:
            row["step_error"] = st.failure.code
        summary.append(row)
        sink.say(" ".join(f"{k}={fmt(v) if isinstance(v, float) else v}" for k, v in row.items()))
    sink.write("scenario.json", emit_scenario(sc))
    sink.write("interfaces.json", emit_json(summary))
    return EXIT_OK


def recheck_snapshot(timeline, text, tol=SNAPSHOT_TOL):
    """Compare a snapshot file against a fresh evaluation; returns ``(ok, worst, bad_theta)``."""
    t, xs, us, ths = parse_snapshot(text)
    u = timeline.query(t, xs, "+")
    th = timeline.theta(t, xs, "+")
    worst = float(np.max(np.abs(u - us) / (1.0 + np.abs(u)))) if xs.size else 0.0
    bad = int(np.sum(th != ths))
    return worst <= tol and bad == 0, worst, bad


def cmd_validate(args, sink):
    sc = _load(args)
    sc = sc.override(validate=True)
    tl = _fan_timeline(sc) if sc.is_riemann and sc.data["spike"] is None else solve(sc.problem)
    if sc.data["spike"] is not None:
        sp = sc.data["spike"]
        tl = solve(inject_spike(tl, sp["tau"], sp["x"], kind=sp["kind"]))
    status = _report(sink, sc, tl)
    files = list(args.snapshots)
    if not files and args.out is not None and args.out.is_dir():
        files = sorted(args.out.glob("snapshot_*.csv"))
    tol = args.tolerance if args.tolerance is not None else SNAPSHOT_TOL
    for path in files:
        ok, worst, bad = recheck_snapshot(tl, path.read_text(encoding="utf-8"), tol)
        sink.say(f"{'PASS' if ok else 'FAIL'} snapshot {path.name}: worst rel diff {worst:.2e}, theta mismatches {bad}")
        if not ok:
            status = EXIT_FAIL
    return status


def cmd_selftest(args, sink):
    results = acceptance.run_all(echo=sink.say)
    sink.write("selftest.json", emit_json([r.__dict__ for r in results]))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


COMMANDS = {
    "riemann": cmd_riemann,
    "cauchy": cmd_cauchy,
    "interface": cmd_interface,
    "spike": cmd_spike,
    "validate": cmd_validate,
    "selftest": cmd_selftest,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    sink = _Sink(args.out)
    try:
        return COMMANDS[args.command](args, sink)
    except GradFluxError as exc:
        err = {"error": exc.code, "message": str(exc)}
        for k in ("t", "x", "epoch", "interface"):
            if getattr(exc, k, None) is not None:
                err[k] = getattr(exc, k)
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(json.dumps({"error": "io_error", "message": str(exc)}), file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
