"""Deterministic CSV / JSON artifacts."""
import io
import json

import numpy as np

from .errors import ParseError

RIGHT_LIMIT_NOTE = "values are right limits u(t, x+), theta(t, x+) at each grid point"


def fmt(v):
    return f"{float(v):.17g}"


def snapshot_grid(lo, hi, n):
    """``n`` points on ``[lo, hi]``; doubling the interval count keeps shared points bit-identical."""
    lo, hi = float(lo), float(hi)
    k = np.arange(n, dtype=float)
    return lo + ((hi - lo) * k) / (n - 1)


def default_x_range(timeline, times, margin=1.0):
    """Window covering every breakpoint at the requested times and the horizon."""
    pts = []
    for t in list(times) + [timeline.horizon]:
        t = max(float(t), timeline.t_start)
        pts.extend(np.asarray(timeline.breakpoints(t), dtype=float).tolist())
    pts = [p for p in pts if np.isfinite(p)]
    if not pts:
        return -margin, margin
    return min(pts) - margin, max(pts) + margin


def emit_snapshot(timeline, t, grid):
    """CSV text with columns ``x, u, theta`` sampled as right limits."""
    xs = np.asarray(grid, dtype=float)
    u = timeline.query(t, xs, "+")
    th = timeline.theta(t, xs, "+")
    out = io.StringIO()
    out.write(f"# snapshot t={fmt(t)}\n")
    out.write(f"# {RIGHT_LIMIT_NOTE}\n")
    out.write("x,u,theta\n")
    for x, v, s in zip(xs, u, th):
        out.write(f"{fmt(x)},{fmt(v)},{int(s)}\n")
    return out.getvalue()


def parse_snapshot(text):
    """``(t, x, u, theta)`` from :func:`emit_snapshot` output."""
    t = None
    rows = []
    header = False
    for n, line in enumerate(text.splitlines(), 1):
        if line.startswith("#"):
            if line.startswith("# snapshot t="):
                try:
                    t = float(line.split("=", 1)[1])
                except ValueError as exc:
                    raise ParseError(f"line {n}: bad snapshot time") from exc
            continue
        if not header:
            if line.strip() != "x,u,theta":
                raise ParseError(f"line {n}: expected header x,u,theta")
            header = True
            continue
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"line {n}: expected 3 columns")
        try:
            rows.append((float(parts[0]), float(parts[1]), int(parts[2])))
        except ValueError as exc:
            raise ParseError(f"line {n}: {exc}") from exc
    if t is None:
        raise ParseError("missing '# snapshot t=' header")
    a = np.array(rows, dtype=float).reshape(-1, 3)
    return t, a[:, 0], a[:, 1], a[:, 2].astype(int)


def emit_trajectory(rows):
    """CSV text with columns ``t, y, ydot, u_left, u_right``."""
    out = io.StringIO()
    out.write("# interface trajectory; traces are the one-sided limits at y(t)\n")
    out.write("t,y,ydot,u_left,u_right\n")
    for r in np.asarray(rows, dtype=float).reshape(-1, 5):
        out.write(",".join(fmt(v) for v in r) + "\n")
    return out.getvalue()


def emit_restart_log(timeline):
    """One ``key=value`` line per restart."""
    lines = []
    for k, r in enumerate(timeline.restart_log):
        xs = " ".join(fmt(x) for x in r["x"])
        lines.append(
            f"restart={k} t={fmt(r['t'])} x=[{xs}] merged={json.dumps(r['merged'])} "
            f"count_before={r['count_before']} count_after={r['count_after']}"
        )
    return "\n".join(lines) + ("\n" if lines else "")


def emit_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, (np.floating, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")
