"""Command-line front end (``geodesic ...``).

Every command prints a JSON run report on stdout (``--human`` prints a short
summary instead).  Exit status: 0 success, 1 non-convergence or failed
checks, 2 usage or domain errors.
"""
from __future__ import annotations

import functools
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import click
import numpy as np

from . import __version__
from ._backend import BACKEND
from .curveio import _jsonable, export_obj, read_curve, write_curve
from .errors import (ConvergenceError, DomainError, IntegrationError, QuadratureError,
                     SingularPointError)
from .expr import ExprError
from .geodesic import (DEFAULT_TOL, GeodesicState, connect_geodesic, el_residual_geodesic,
                       integrate_geodesic, launch_direction)
from .revolution import geodesic_revolution
from .surface import fundamental_form, regularity_check, resolve_surface, revolution
from .variational import FunctionalSpec, direct_minimize, el_residual_1d, functional_eval

EXIT_OK, EXIT_NONCONVERGED, EXIT_USAGE = 0, 1, 2
# lets negative numbers through as positional arguments ("fff plane -1 2")
NUMERIC = {"ignore_unknown_options": True}


@dataclass
class RunReport:
    command: list
    surface: str | None
    tolerances: dict
    result: dict
    wall_time: float = 0.0
    backend: str = BACKEND
    version: str = __version__
    status: str = "ok"
    files: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(_jsonable(asdict(self)), indent=2, allow_nan=False)


def _human(report: RunReport) -> str:
    def show(x):
        if isinstance(x, float):
            return f"{x:.6g}"
        if isinstance(x, (list, tuple)):
            return "[" + ", ".join(show(v) for v in x) + "]"
        return str(x)
    lines = [f"{report.command[0]}: {report.status}" + (f" on {report.surface}" if report.surface else "")]
    lines += [f"  {k}: {show(v)}" for k, v in report.result.items() if not isinstance(v, dict)]
    lines.append(f"  wall time: {report.wall_time:.3g} s")
    return "\n".join(lines)


def _run(fn):
    """Time the command, print its report, and map exceptions to exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, human=False, report_path=None, **kwargs):
        t0 = time.perf_counter()
        try:
            report = fn(*args, **kwargs)
        except (ConvergenceError, IntegrationError) as exc:
            _fail(exc, EXIT_NONCONVERGED)
        except (DomainError, SingularPointError, ExprError, QuadratureError, OSError) as exc:
            _fail(exc, EXIT_USAGE)
        report.wall_time = time.perf_counter() - t0
        if report_path:
            Path(report_path).write_text(report.to_json() + "\n", encoding="utf-8")
        click.echo(_human(report) if human else report.to_json())
        if report.status != "ok":
            sys.exit(EXIT_NONCONVERGED)
    return wrapper


def _fail(exc, code):
    kind = type(exc).__name__
    click.echo(f"error ({kind}): {exc}", err=True)
    diag = getattr(exc, "diagnostics", None)
    if diag:
        click.echo(json.dumps(_jsonable(diag), indent=2), err=True)
    partial = getattr(exc, "partial", None)
    if partial is not None and len(partial):
        click.echo(f"partial curve: {len(partial)} samples, length {partial.length:.6g}", err=True)
    sys.exit(code)


def _common(f):
    f = click.option("--human", is_flag=True, help="Print a short summary instead of JSON.")(f)
    f = click.option("--report", "report_path", type=click.Path(dir_okay=False),
                     help="Also write the JSON report to this file.")(f)
    return f


def _tol_option(default=DEFAULT_TOL):
    return click.option("--tol", type=float, default=default, show_default=True,
                        help="Tolerance.")


def _surface(ref):
    return resolve_surface(ref)


def _curve_summary(spec, c) -> dict:
    out = {"samples": len(c), "length": c.length,
           "start": [float(c.u[0]), float(c.v[0])], "end": [float(c.u[-1]), float(c.v[-1])],
           "end_point": [float(x) for x in c.points[-1]]}
    if len(c) >= 5:
        ru, rv = el_residual_geodesic(spec, c)
        out["residual_u"], out["residual_v"] = ru, rv
    return out


def _save(c, out, report, **extra):
    if out:
        write_curve(out, c, **extra)
        report.files.append(str(out))


@click.group()
@click.version_option(__version__, prog_name="geodesic")
def main():
    """Geodesics on parametric surfaces and direct variational methods."""


@main.command("fff", context_settings=NUMERIC)
@click.argument("surface")
@click.argument("u", type=float)
@click.argument("v", type=float)
@_common
@_run
def cmd_fff(surface, u, v):
    """First fundamental form E, F, G and their partials at (U, V)."""
    s = _surface(surface)
    ff = fundamental_form(s, u, v)
    res = ff.as_dict()
    res["det"] = ff.det
    res["regular"] = regularity_check(s, u, v).regular
    return RunReport(["fff", surface, u, v], s.name, {"eps_reg": s.eps_reg}, res)


@main.command("shoot", context_settings=NUMERIC)
@click.argument("surface")
@click.argument("u", type=float)
@click.argument("v", type=float)
@click.argument("angle", type=float)
@click.argument("length", type=float)
@_tol_option()
@click.option("--out", type=click.Path(dir_okay=False), help="Curve file (.csv or .json).")
@_common
@_run
def cmd_shoot(surface, u, v, angle, length, tol, out):
    """Integrate the geodesic from (U, V) at launch ANGLE for arc length LENGTH.

    ANGLE is measured in the tangent plane from the r_u direction towards r_v.
    """
    s = _surface(surface)
    du, dv = launch_direction(s, u, v, angle)
    c = integrate_geodesic(s, GeodesicState(0.0, u, v, du, dv), length, tol)
    report = RunReport(["shoot", surface, u, v, angle, length], s.name, {"tol": tol},
                       _curve_summary(s, c))
    ff = [fundamental_form(s, a, b) for a, b in zip(c.u, c.v)]
    speed = [math.sqrt(f.E * a * a + 2 * f.F * a * b + f.G * b * b) for f, a, b in zip(ff, c.du, c.dv)]
    report.result["speed_deviation"] = float(np.max(np.abs(np.array(speed) - 1.0)))
    _save(c, out, report, tol=tol)
    return report


@main.command("connect", context_settings=NUMERIC)
@click.argument("surface")
@click.argument("u0", type=float)
@click.argument("v0", type=float)
@click.argument("u1", type=float)
@click.argument("v1", type=float)
@_tol_option()
@click.option("--seeds", type=int, default=32, show_default=True, help="Launch angles in the scan.")
@click.option("--max-iter", type=int, default=100, show_default=True, help="Newton iterations per bracket.")
@click.option("--out", type=click.Path(dir_okay=False), help="Curve file (.csv or .json).")
@_common
@_run
def cmd_connect(surface, u0, v0, u1, v1, tol, seeds, max_iter, out):
    """Shortest geodesic found by shooting from (U0, V0) to (U1, V1)."""
    if seeds < 1 or max_iter < 1:
        raise DomainError("--seeds and --max-iter must be positive")
    s = _surface(surface)
    c = connect_geodesic(s, (u0, v0), (u1, v1), tol=tol, seeds=seeds, max_iter=max_iter)
    res = _curve_summary(s, c)
    for key in ("theta", "miss", "iterations", "ill_conditioned", "alternatives"):
        if key in c.meta:
            res[key] = c.meta[key]
    report = RunReport(["connect", surface, u0, v0, u1, v1], s.name,
                       {"tol": tol, "seeds": seeds, "max_iter": max_iter}, res)
    _save(c, out, report, tol=tol)
    return report


def _solve_c1(f, u1, u2, target, tol, samples):
    """c1 such that the quadrature curve has v(u2) = target.

    v(u2) grows monotonically with |c1| on (0, min f); the bracket is pushed
    towards min f until it straddles the target.
    """
    from scipy.optimize import brentq, minimize_scalar

    from .expr import as_expr

    if target == 0:
        return 0.0
    prof = as_expr(f, ("u",))
    lo, hi = min(u1, u2), max(u1, u2)
    grid = np.linspace(lo, hi, 513)
    vals = np.array([prof(u=float(x)) for x in grid])
    k = int(np.argmin(vals))
    fine = minimize_scalar(lambda x: prof(u=float(x)), method="bounded",
                           bounds=(grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]),
                           options={"xatol": 1e-12})
    fmin = min(float(vals[k]), float(fine.fun))
    if not fmin > 0:
        raise DomainError("profile must be positive on the interval")
    sgn = 1.0 if target > 0 else -1.0

    def miss(c):
        return geodesic_revolution(f, u1, u2, sgn * c, tol, samples=samples).y[-1] - target

    top = None
    for e in (2, 4, 6, 9):
        c_hi = fmin * (1 - 10.0 ** -e)
        try:
            top = miss(c_hi)
        except (DomainError, QuadratureError):
            break
        if sgn * top >= 0:
            return sgn * brentq(miss, 0.0, c_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    reach = "unknown" if top is None else f"{top + target:.6g}"
    raise DomainError(f"v={target!r} is out of reach for a curve monotone in u (reach {reach})")


@main.command("revolve", context_settings=NUMERIC)
@click.argument("profile")
@click.argument("u1", type=float)
@click.argument("u2", type=float)
@click.option("--c1", type=float, help="First-integral constant c1.")
@click.option("--connect", "v_target", type=float, help="Solve for c1 so that v(U2) equals this.")
@click.option("--branch", type=click.Choice(["+", "-"]), default="+", show_default=True)
@click.option("--samples", type=int, default=201, show_default=True)
@_tol_option(1e-10)
@click.option("--out", type=click.Path(dir_okay=False), help="Curve file (.csv or .json).")
@_common
@_run
def cmd_revolve(profile, u1, u2, c1, v_target, branch, samples, tol, out):
    """Geodesic v(u) on the surface of revolution of y = PROFILE over [U1, U2].

    Give either --c1 or --connect.
    """
    if (c1 is None) == (v_target is None):
        raise DomainError("give exactly one of --c1 and --connect")
    if v_target is not None:
        c1 = _solve_c1(profile, u1, u2, v_target, tol, samples)
    b = 1 if branch == "+" else -1
    q = geodesic_revolution(profile, u1, u2, c1, tol, branch=b, samples=samples)
    s = revolution(profile, (min(u1, u2), max(u1, u2)))
    c = q.to_curve(s)
    res = {"c1": c1, "branch": b, "length": q.length, "v_end": float(q.y[-1]),
           "turning": list(q.turning), "quadrature_error": q.error, "samples": len(q.x)}
    cl = q.clairaut()
    res["clairaut_variation"] = float(np.ptp(cl) / abs(np.mean(cl))) if c1 else 0.0
    if not any(q.turning) and len(c) >= 5:
        res["residual_u"], res["residual_v"] = el_residual_geodesic(s, c)
    report = RunReport(["revolve", profile, u1, u2], s.name, {"tol": tol}, res)
    _save(c, out, report, c1=c1, branch=b, tol=tol)
    return report


@main.command("minimize", context_settings=NUMERIC)
@click.argument("integrand")
@click.argument("a", type=float)
@click.argument("b", type=float)
@click.argument("ya", metavar="A", type=float)
@click.argument("yb", metavar="B", type=float)
@click.argument("n", type=int)
@_tol_option(1e-10)
@click.option("--max-iter", type=int, default=500, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="CSV file for the discrete curve.")
@_common
@_run
def cmd_minimize(integrand, a, b, ya, yb, n, tol, max_iter, out):
    """Direct method: minimize the polygonal sum of INTEGRAND(x, y, p) with y(a)=A, y(b)=B."""
    f = FunctionalSpec(integrand, a, b, ya, yb)
    c, info = direct_minimize(f, n, tol=tol, max_iter=max_iter, return_info=True)
    res = {"J": functional_eval(f, c), "iterations": info.iterations,
           "gradient_norm": info.gradient_norm, "newton_steps": info.newton_steps,
           "gradient_steps": info.gradient_steps, "n": n}
    if n >= 3:
        res["el_residual_max"] = float(np.max(np.abs(el_residual_1d(f, c))))
    report = RunReport(["minimize", integrand, a, b, ya, yb, n], None,
                       {"tol": tol, "max_iter": max_iter}, res)
    if out:
        Path(out).write_text(c.to_csv(), encoding="utf-8")
        report.files.append(str(out))
    return report


@main.command("verify")
@click.argument("suites", nargs=-1, required=True)
@click.option("--surface", "surface_ref", help="Surface for the ad and speed suites.")
@click.option("--jobs", type=int, default=1, show_default=True, help="Run suites in parallel.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def cmd_verify(suites, surface_ref, jobs, as_json):
    """Run verification suites: sphere, cylinder, plane, revolution, direct,
    ad, speed, norms, localization, or all."""
    from .verify import SUITES, run_suites

    unknown = [x for x in suites if x not in SUITES and x != "all"]
    if unknown:
        click.echo(f"error: unknown suite {', '.join(unknown)}; "
                   f"choose from {', '.join(SUITES)} or all", err=True)
        sys.exit(EXIT_USAGE)
    try:
        s = resolve_surface(surface_ref) if surface_ref else None
    except (DomainError, ExprError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    t0 = time.perf_counter()
    results = run_suites(suites, s, jobs=jobs)
    ok = all(c.passed for _, checks in results for c in checks)
    if as_json:
        doc = {"passed": ok, "wall_time": time.perf_counter() - t0,
               "suites": {name: [c.as_dict() for c in checks] for name, checks in results}}
        click.echo(json.dumps(_jsonable(doc), indent=2))
    else:
        for name, checks in results:
            click.echo(f"[{name}]")
            for c in checks:
                click.echo("  " + c.line())
        click.echo("all checks passed" if ok else "some checks FAILED")
    sys.exit(EXIT_OK if ok else EXIT_NONCONVERGED)


@main.command("export-obj")
@click.argument("surface")
@click.argument("res", type=int)
@click.argument("curves", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), help="OBJ file (default: stdout).")
def cmd_export_obj(surface, res, curves, out):
    """Triangulated RES x RES mesh of SURFACE plus CURVES (.csv/.json) as polylines."""
    try:
        s = _surface(surface)
        text = export_obj(s, res, [read_curve(p) for p in curves])
    except (DomainError, SingularPointError, ExprError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    if out:
        Path(out).write_text(text, encoding="utf-8")
        nv = sum(1 for line in text.splitlines() if line.startswith("v "))
        click.echo(json.dumps({"file": out, "vertices": nv, "surface": s.name}))
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":  # pragma: no cover
    main()
