"""Geodesic initial- and boundary-value problems on parametric surfaces.

The integrator follows the extremals of the energy Lagrangian
E u'^2 + 2F u'v' + G v'^2, which are the arc-length geodesics traversed at
constant speed.  :func:`el_residual_geodesic` checks curves against the
arc-length Euler-Lagrange equations evaluated term by term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import minimize_scalar

from . import _backend
from .errors import ConvergenceError, DomainError, IntegrationError, SingularPointError
from .surface import SurfaceSpec, eval_point, fundamental_form, tangent_vectors

DEFAULT_TOL = 1e-9
DEFAULT_ATOL = 1e-12
DEFAULT_MAX_STEP = 0.05
FD_STEP = 1e-7
ILL_CONDITIONED = 1e-6


@dataclass(frozen=True)
class GeodesicState:
    t: float
    u: float
    v: float
    du: float
    dv: float


@dataclass
class GeodesicCurve:
    """Sampled geodesic: affine parameter, coordinates, velocities, embedding, arc length."""

    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    points: np.ndarray
    s: np.ndarray
    slopes: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def length(self) -> float:
        return float(self.s[-1])

    def state(self, i: int) -> GeodesicState:
        return GeodesicState(float(self.t[i]), float(self.u[i]), float(self.v[i]),
                             float(self.du[i]), float(self.dv[i]))

    @property
    def start(self) -> GeodesicState:
        return self.state(0)

    @property
    def end(self) -> GeodesicState:
        return self.state(-1)

    def at(self, t) -> np.ndarray:
        """Cubic Hermite interpolation of (u, v, du, dv, s) at parameter(s) ``t``."""
        if self.slopes is None:
            raise ValueError("curve carries no slopes for dense output")
        t = np.atleast_1d(np.asarray(t, dtype=float))
        y = np.column_stack([self.u, self.v, self.du, self.dv, self.s])
        k = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, len(self.t) - 2)
        t0, t1 = self.t[k], self.t[k + 1]
        h = (t1 - t0)[:, None]
        x = ((t - t0) / (t1 - t0))[:, None]
        h00 = 2 * x**3 - 3 * x**2 + 1
        h10 = x**3 - 2 * x**2 + x
        h01 = -2 * x**3 + 3 * x**2
        h11 = x**3 - x**2
        return (h00 * y[k] + h10 * h * self.slopes[k]
                + h01 * y[k + 1] + h11 * h * self.slopes[k + 1])

    @classmethod
    def from_samples(cls, spec: SurfaceSpec, t, u, v, du, dv, meta=None) -> "GeodesicCurve":
        t, u, v, du, dv = (np.asarray(a, dtype=float) for a in (t, u, v, du, dv))
        pts = np.array([eval_point(spec, a, b) for a, b in zip(u, v)])
        sp = np.array([_speed(spec, a, b, c, d) for a, b, c, d in zip(u, v, du, dv)])
        s = cumulative_trapezoid(sp, t, initial=0.0) if len(t) > 1 else np.zeros(1)
        return cls(t, u, v, du, dv, pts, s, None, dict(meta or {}, surface=spec.name))


def _speed(spec, u, v, du, dv) -> float:
    ff = fundamental_form(spec, u, v)
    return math.sqrt(max(ff.E * du * du + 2 * ff.F * du * dv + ff.G * dv * dv, 0.0))


def _require_regular(spec: SurfaceSpec, u: float, v: float):
    ff = fundamental_form(spec, u, v)
    if not ff.det > spec.eps_reg:
        raise SingularPointError(f"singular point ({u}, {v}): EG-F^2={ff.det:.3e}", ff.det)
    return ff


def speed(spec: SurfaceSpec, st: GeodesicState) -> float:
    """ds/dt = sqrt(E u'^2 + 2F u'v' + G v'^2)."""
    _require_regular(spec, st.u, st.v)
    return _speed(spec, st.u, st.v, st.du, st.dv)


def geodesic_rhs(spec: SurfaceSpec, st: GeodesicState) -> tuple[float, float, float, float]:
    """(u', v', u'', v'') of the constant-speed geodesic system."""
    spec.check_domain(st.u, st.v)
    try:
        du, dv, ddu, ddv, _ = spec.kernel.rhs((st.u, st.v, st.du, st.dv, 0.0))
    except _backend.KERNEL_ERRORS as exc:
        raise spec.kernel_error(exc) from None
    return du, dv, ddu, ddv


_STATUS_TEXT = {2: "singular point", 3: "domain exit", 4: "step underflow", 5: "step limit"}


def _run(spec: SurfaceSpec, y0, length, rtol, atol, max_step, max_steps=10**6):
    status, tape, index, message, T, Y, D = spec.kernel.integrate(
        tuple(float(c) for c in y0), float(length), rtol, atol, max_step, 0.0, max_steps)
    pts = np.array([spec.kernel.point(a, b) for a, b in Y[:, :2]])
    curve = GeodesicCurve(T, Y[:, 0].copy(), Y[:, 1].copy(), Y[:, 2].copy(), Y[:, 3].copy(),
                          pts, Y[:, 4].copy(), D,
                          {"surface": spec.name, "rtol": rtol, "atol": atol})
    if status:
        if status == 1:
            exc = spec.kernel_error(_KernelStatus(status, tape, index, message))
            text = str(exc)
        else:
            text = f"{_STATUS_TEXT.get(status, 'failure')}: {message}"
        curve.meta["status"] = text
        raise IntegrationError(f"integration stopped at t={T[-1]:.6g}: {text}", curve, status)
    return curve


@dataclass
class _KernelStatus:
    status: int
    tape: int
    index: int
    message: str


def integrate_geodesic(spec: SurfaceSpec, st0: GeodesicState, target_length: float,
                       tol: float = DEFAULT_TOL, *, atol: float = DEFAULT_ATOL,
                       max_step: float = DEFAULT_MAX_STEP) -> GeodesicCurve:
    """Integrate the geodesic through ``st0`` for arc length ``target_length``.

    The launch velocity is rescaled to unit speed, so the curve parameter is
    arc length.  Raises :class:`IntegrationError` (with ``partial``) on a
    singular point, a domain exit or step underflow.
    """
    if not target_length > 0:
        raise DomainError("target_length must be positive")
    ff = _require_regular(spec, st0.u, st0.v)
    q = ff.E * st0.du**2 + 2 * ff.F * st0.du * st0.dv + ff.G * st0.dv**2
    if not q > 0:
        raise DomainError("initial velocity must be nonzero")
    sp = math.sqrt(q)
    curve = _run(spec, (st0.u, st0.v, st0.du / sp, st0.dv / sp, 0.0), target_length,
                 tol, atol, max_step)
    curve.t = curve.t + st0.t
    curve.meta.update(target_length=float(target_length), tol=tol)
    return curve


# -- shooting ---------------------------------------------------------------

def _frame(spec, u, v):
    """Parameter-space images of an orthonormal tangent basis at (u, v)."""
    ff = _require_regular(spec, u, v)
    se, sd = math.sqrt(ff.E), math.sqrt(ff.det)
    return (1.0 / se, 0.0), (-ff.F / (se * sd), se / sd)


def launch_direction(spec: SurfaceSpec, u: float, v: float, theta: float) -> tuple[float, float]:
    """Unit-speed (du, dv) at angle ``theta`` from the r_u direction in the tangent plane."""
    e1, e2 = _frame(spec, u, v)
    c, s = math.cos(theta), math.sin(theta)
    return (c * e1[0] + s * e2[0], c * e1[1] + s * e2[1])


@dataclass
class _Shot:
    theta: float
    s_star: float
    distance: float
    miss: float
    at_start: bool
    at_end: bool
    length: float


def _embedded_tangent(spec, u, v, du, dv):
    ru, rv = tangent_vectors(spec, u, v)
    return ru * du + rv * dv, np.cross(ru, rv)


def _closest_approach(spec, curve, target):
    d = np.linalg.norm(curve.points - target, axis=1)
    k = int(np.argmin(d))
    n = len(curve)
    if n < 2:
        return float(curve.t[0]), curve.points[0], curve.end
    first = max(k - 1, 0)
    lo = float(curve.t[first])
    hi = float(curve.t[min(k + 1, n - 1)])
    # scalar Hermite data for the (at most two) segments around node k
    ts = curve.t[first:first + 3].tolist()
    us, vs = curve.u[first:first + 3].tolist(), curve.v[first:first + 3].tolist()
    dus, dvs = curve.slopes[first:first + 3, 0].tolist(), curve.slopes[first:first + 3, 1].tolist()
    tx, ty, tz = (float(c) for c in target)
    point = spec.kernel.point

    def dist2(t):
        i = 0 if len(ts) == 2 or t <= ts[1] else 1
        h = ts[i + 1] - ts[i]
        x = (t - ts[i]) / h
        x2 = x * x
        h00, h10 = 2 * x2 * x - 3 * x2 + 1, (x2 * x - 2 * x2 + x) * h
        h01, h11 = -2 * x2 * x + 3 * x2, (x2 * x - x2) * h
        u = h00 * us[i] + h10 * dus[i] + h01 * us[i + 1] + h11 * dus[i + 1]
        v = h00 * vs[i] + h10 * dvs[i] + h01 * vs[i + 1] + h11 * dvs[i + 1]
        px, py, pz = point(u, v)
        return (px - tx) ** 2 + (py - ty) ** 2 + (pz - tz) ** 2

    res = minimize_scalar(dist2, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-13 * max(1.0, hi)})
    t = float(res.x)
    if dist2(t) > d[k] ** 2:
        t = float(curve.t[k])
    y = curve.at(t)[0]
    return t, np.array(spec.kernel.point(y[0], y[1])), GeodesicState(t, *y[:4])


def _shoot(spec, p0, theta, length, target, rtol, atol, max_step, exact=False):
    du, dv = launch_direction(spec, p0[0], p0[1], theta)
    y0 = (p0[0], p0[1], du, dv, 0.0)
    try:
        curve = _run(spec, y0, length, rtol, atol, max_step)
    except IntegrationError as exc:
        curve = exc.partial
        if curve is None or len(curve) < 2:
            return None
    t, p, st = _closest_approach(spec, curve, target)
    if exact and 0.0 < t < curve.t[-1]:
        # measure the miss at a true integration node rather than the interpolant
        try:
            end_curve = _run(spec, y0, t, rtol, atol, max_step)
        except IntegrationError:
            pass
        else:
            st, p = end_curve.end, end_curve.points[-1]
    tan, normal = _embedded_tangent(spec, st.u, st.v, st.du, st.dv)
    side = np.cross(normal / np.linalg.norm(normal), tan)
    e = target - p
    h_first = curve.t[1] - curve.t[0]
    return _Shot(theta, t, float(np.linalg.norm(e)), float(e @ side),
                 t <= 0.5 * h_first, t >= curve.t[-1] - 1e-12, float(curve.t[-1]))


def _finalize(spec, p0, theta, s_star, target, tol, rtol, atol, max_step, tries=8):
    du, dv = launch_direction(spec, p0[0], p0[1], theta)
    st = GeodesicState(0.0, p0[0], p0[1], du, dv)
    length = s_star
    curve = None
    for _ in range(tries):
        if not length > 0:
            return None
        curve = integrate_geodesic(spec, st, length, rtol, atol=atol, max_step=max_step)
        end = curve.end
        tan, _ = _embedded_tangent(spec, end.u, end.v, end.du, end.dv)
        e = target - curve.points[-1]
        miss = float(np.linalg.norm(e))
        curve.meta["miss"] = miss
        if miss < tol:
            return curve
        length += float(e @ tan)
    return curve


def connect_geodesic(spec: SurfaceSpec, p0, p1, *, tol: float = DEFAULT_TOL,
                     max_iter: int = 100, seeds: int = 32, max_length: float | None = None,
                     rtol: float = DEFAULT_TOL, atol: float = DEFAULT_ATOL,
                     max_step: float = DEFAULT_MAX_STEP, scan_rtol: float = 1e-6) -> GeodesicCurve:
    """Shortest geodesic found by shooting from ``p0`` to ``p1`` (parameter pairs).

    A fixed scan over ``seeds`` launch angles brackets sign changes of the
    signed transverse miss; each bracket is refined by safeguarded Newton
    iteration with a finite-difference slope.  ``meta`` records the other
    converged lengths and conditioning flags.
    """
    p0 = (float(p0[0]), float(p0[1]))
    p1 = (float(p1[0]), float(p1[1]))
    _require_regular(spec, *p0)
    _require_regular(spec, *p1)
    start = eval_point(spec, *p0)
    target = eval_point(spec, *p1)
    chord = float(np.linalg.norm(target - start))
    if chord < tol:
        curve = GeodesicCurve.from_samples(spec, [0.0], [p0[0]], [p0[1]], [0.0], [0.0])
        curve.meta.update(miss=chord, alternatives=[], iterations=0)
        return curve
    scan_length = max_length if max_length is not None else 2.5 * chord

    thetas = [2 * math.pi * j / seeds for j in range(seeds)]
    shots = [_shoot(spec, p0, th, scan_length, target, scan_rtol, atol, math.inf)
             for th in thetas]
    brackets = []
    for j in range(seeds):
        a, b = shots[j], shots[(j + 1) % seeds]
        if a is None or b is None or a.at_start or b.at_start:
            continue
        if a.miss == 0.0 or (a.miss > 0) != (b.miss > 0):
            hi = b.theta if j + 1 < seeds else b.theta + 2 * math.pi
            brackets.append((a.theta, hi, a, b))

    found, failures = [], []
    total_iter = 0
    ill = False
    for lo, hi, a, b in brackets:
        try:
            theta, s_star, iters, slope = _refine(spec, p0, target, lo, hi, a, b, tol, max_iter,
                                                  rtol, atol, max_step)
        except ConvergenceError as exc:
            failures.append(exc.diagnostics)
            continue
        total_iter += iters
        if slope is not None and abs(slope) < ILL_CONDITIONED:
            ill = True
        try:
            curve = _finalize(spec, p0, theta, s_star, target, tol, rtol, atol, max_step)
        except IntegrationError as exc:
            failures.append({"theta": theta, "error": str(exc)})
            continue
        if curve is None or curve.meta["miss"] >= tol:
            failures.append({"theta": theta, "miss": None if curve is None else curve.meta["miss"]})
            continue
        curve.meta.update(theta=theta, slope=slope)
        found.append(curve)

    if not found:
        misses = [None if s is None else s.distance for s in shots]
        raise ConvergenceError("no shot converged", None,
                               {"seed_miss": misses, "brackets": len(brackets), "failures": failures})
    found.sort(key=lambda c: c.length)
    best = found[0]
    best.meta.update(
        miss=best.meta["miss"], iterations=total_iter, seeds=seeds,
        alternatives=[c.length for c in found[1:]], ill_conditioned=ill,
        target=list(p1), tol=tol,
    )
    return best


def _refine(spec, p0, target, lo, hi, a, b, tol, max_iter, rtol, atol, max_step):
    fa, fb = a.miss, b.miss
    shot = a if abs(fa) <= abs(fb) else b
    theta = shot.theta if shot is a else hi
    s_guess = shot.s_star
    slope = None
    for it in range(1, max_iter + 1):
        length = 1.1 * s_guess + 0.05 * np.linalg.norm(target - eval_point(spec, *p0))
        cur = _shoot(spec, p0, theta, length, target, rtol, atol, max_step, exact=True)
        while cur is not None and cur.at_end and cur.length >= length * (1 - 1e-12):
            length *= 2.0
            cur = _shoot(spec, p0, theta, length, target, rtol, atol, max_step, exact=True)
        if cur is None or cur.at_start:
            raise ConvergenceError("shot degenerated", None, {"theta": theta})
        s_guess = cur.s_star
        if abs(cur.miss) < 0.1 * tol or hi - lo < 1e-15:
            return theta, cur.s_star, it, slope
        if (cur.miss > 0) == (fa > 0):
            lo, fa = theta, cur.miss
        else:
            hi, fb = theta, cur.miss
        probe = _shoot(spec, p0, theta + FD_STEP, length, target, rtol, atol, max_step, exact=True)
        slope = 0.0 if probe is None else (probe.miss - cur.miss) / FD_STEP
        step = theta - cur.miss / slope if slope != 0.0 else math.nan
        theta = step if lo < step < hi else 0.5 * (lo + hi)
    raise ConvergenceError("shooting did not converge", None,
                           {"theta": theta, "bracket": (lo, hi), "miss": (fa, fb)})


# -- residuals --------------------------------------------------------------

def _fd_weights(offsets: np.ndarray) -> np.ndarray:
    """First-derivative weights at 0 for the stencil ``offsets`` (batched, shape (n, m))."""
    n, m = offsets.shape
    scale = np.max(np.abs(offsets), axis=1, keepdims=True)
    x = offsets / scale
    V = np.stack([x**p for p in range(m)], axis=1)
    rhs = np.zeros((n, m))
    rhs[:, 1] = 1.0
    w = np.linalg.solve(V, rhs[..., None])[..., 0]
    return w / scale


def derivative(t: np.ndarray, q: np.ndarray, width: int = 5) -> np.ndarray:
    """dq/dt on samples ``t`` with centred ``width``-point stencils (one-sided at the ends)."""
    t = np.asarray(t, dtype=float)
    q = np.asarray(q, dtype=float)
    n = len(t)
    if n < width:
        raise ValueError(f"need at least {width} samples")
    half = width // 2
    first = np.clip(np.arange(n) - half, 0, n - width)
    idx = first[:, None] + np.arange(width)[None, :]
    w = _fd_weights(t[idx] - t[:, None])
    return np.sum(w * q[idx], axis=1)


def geodesic_residuals(spec: SurfaceSpec, c: GeodesicCurve) -> tuple[np.ndarray, np.ndarray]:
    """Both arc-length Euler-Lagrange expressions at every sample of ``c``."""
    if len(c) < 5:
        raise ValueError("residuals need at least 5 samples")
    forms = [_require_regular(spec, a, b) for a, b in zip(c.u, c.v)]
    E, F, G, Eu, Ev, Fu, Fv, Gu, Gv = (np.array([getattr(f, k) for f in forms]) for k in
                                       ("E", "F", "G", "E_u", "E_v", "F_u", "F_v", "G_u", "G_v"))
    du, dv = c.du, c.dv
    S = np.sqrt(E * du**2 + 2 * F * du * dv + G * dv**2)
    q_u = 2 * (E * du + F * dv) / S
    q_v = 2 * (F * du + G * dv) / S
    r_u = (Eu * du**2 + 2 * Fu * du * dv + Gu * dv**2) / S - derivative(c.t, q_u)
    r_v = (Ev * du**2 + 2 * Fv * du * dv + Gv * dv**2) / S - derivative(c.t, q_v)
    return r_u, r_v


def el_residual_geodesic(spec: SurfaceSpec, c: GeodesicCurve) -> tuple[float, float]:
    """Maximum absolute residuals of the u- and v-equations along ``c``."""
    r_u, r_v = geodesic_residuals(spec, c)
    return float(np.max(np.abs(r_u))), float(np.max(np.abs(r_v)))
