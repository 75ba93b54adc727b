"""Geodesics by quadrature when the metric depends on one coordinate only.

With F = 0 and E, G functions of u alone the first integral
G v' / sqrt(E + G v'^2) = c1 gives v(u) = c1 * int sqrt(E / (G (G - c1^2))) du;
with E, G functions of v the roles swap.  A surface of revolution
(u, f cos v, f sin v) has E = 1 + f'^2 and G = f^2.

Integrals are computed by adaptive Gauss-Kronrod (7/15) with bisection.
At the ends of the range the substitution x = x0 + s^2 removes the inverse
square-root singularity that appears at a turning point, where the curve
touches a parallel.  Curves are anchored at the lower limit: the dependent
coordinate is 0 at the first sample.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, QuadratureError, TurningPointError
from .expr import Expr, ExprError, as_expr, eval_jet, evaluate
from .jet import Jet2

DEFAULT_TOL = 1e-10
DEFAULT_SAMPLES = 201

# Kronrod abscissae on [-1, 1] (positive half) with Kronrod and Gauss weights
_XK = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                0.207784955007898467600689403773245, 0.0])
_WK = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
KRONROD = np.concatenate([_WK[:-1], _WK[::-1]])
GAUSS = np.zeros(15)
GAUSS[1:14:2] = np.concatenate([_WG[:-1], _WG[::-1]])


def gk15(f, a: float, b: float) -> tuple[float, float]:
    """One Gauss-Kronrod panel: (Kronrod estimate, |Kronrod - Gauss|)."""
    c, r = 0.5 * (a + b), 0.5 * (b - a)
    fx = np.array([f(c + r * x) for x in NODES], dtype=float)
    if not np.all(np.isfinite(fx)):
        bad = c + r * NODES[~np.isfinite(fx)][0]
        raise QuadratureError(f"integrand not finite at {bad!r}")
    k = r * float(KRONROD @ fx)
    g = r * float(GAUSS @ fx)
    return k, abs(k - g)


def _substituted(f, x0: float, toward: float):
    """s -> 2 s f(x0 +- s^2) with the offset taken as the representable x - x0.

    Very close to x0 the sum x0 + s^2 rounds; using d = fl(x0 + s^2) - x0
    (and one ulp when that is 0) keeps the integrand finite and consistent
    with the point actually evaluated.
    """
    sign = 1.0 if toward > x0 else -1.0

    def g(s):
        x = x0 + sign * s * s
        d = abs(x - x0)
        if d == 0.0:
            x = math.nextafter(x0, toward)
            d = abs(x - x0)
        return 2.0 * math.sqrt(d) * f(x)
    return g


def _pieces(f, xs, sub_first: bool, sub_last: bool):
    """Split int_{xs[0]}^{xs[-1]} f into oriented panels (g, lo, hi, sign, segment)."""
    out = []
    last = len(xs) - 2
    for i in range(last + 1):
        a, b = float(xs[i]), float(xs[i + 1])
        sa, sb = sub_first and i == 0, sub_last and i == last
        sign = 1.0 if b > a else -1.0
        if sa and sb:
            m = 0.5 * (a + b)
            out.append((_substituted(f, a, m), 0.0, math.sqrt(abs(m - a)), sign, i))
            out.append((_substituted(f, b, m), 0.0, math.sqrt(abs(b - m)), sign, i))
        elif sa:
            out.append((_substituted(f, a, b), 0.0, math.sqrt(abs(b - a)), sign, i))
        elif sb:
            out.append((_substituted(f, b, a), 0.0, math.sqrt(abs(b - a)), sign, i))
        else:
            out.append((f, min(a, b), max(a, b), sign, i))
    return out


def cumulative_quad(f, xs, tol: float = DEFAULT_TOL, *, sub_first: bool = False,
                    sub_last: bool = False, max_panels: int = 20000):
    """Running integrals of ``f`` from xs[0] to each xs[k] with total error ``tol``.

    The segments between consecutive samples seed a single global adaptive
    scheme: the panel with the largest error estimate is bisected until the
    summed estimate drops below ``tol``.  ``sub_first`` / ``sub_last`` use
    x = x0 +- s^2 on the outer segments, which turns an integrable
    (x - x0)^(-1/2) endpoint singularity into a smooth integrand.
    Returns (values, error estimate, panel count).
    """
    xs = np.asarray(xs, dtype=float)
    if len(xs) < 2:
        raise DomainError("need at least two abscissae")
    heap = []
    total_err = 0.0
    for k, (g, lo, hi, sign, seg) in enumerate(_pieces(f, xs, sub_first, sub_last)):
        if hi > lo:
            val, err = gk15(g, lo, hi)
            heap.append((-err, k, lo, hi, val, g, sign, seg))
            total_err += err
    heapq.heapify(heap)
    counter = len(heap)
    panels = len(heap)
    while heap and total_err > tol:
        if panels >= max_panels:
            raise QuadratureError(f"no convergence after {panels} panels (error {total_err:.3e})")
        neg, _, x0, x1, v, g, sign, seg = heapq.heappop(heap)
        m = 0.5 * (x0 + x1)
        if not x0 < m < x1:
            raise QuadratureError(f"interval collapsed near {m!r}")
        vl, el = gk15(g, x0, m)
        vr, er = gk15(g, m, x1)
        total_err += el + er + neg
        heapq.heappush(heap, (-el, counter, x0, m, vl, g, sign, seg))
        heapq.heappush(heap, (-er, counter + 1, m, x1, vr, g, sign, seg))
        counter += 2
        panels += 1
    per_segment = [[] for _ in range(len(xs) - 1)]
    for item in heap:
        per_segment[item[7]].append(item[6] * item[4])
    steps = np.array([math.fsum(p) for p in per_segment])
    return np.concatenate([[0.0], np.cumsum(steps)]), total_err, panels


def adaptive_quad(f, a: float, b: float, tol: float = DEFAULT_TOL, *,
                  sub_a: bool = False, sub_b: bool = False, max_panels: int = 20000):
    """int_a^b f to absolute error ``tol``; see :func:`cumulative_quad` for the flags.

    Returns (value, error estimate, panel count).
    """
    if a == b:
        return 0.0, 0.0, 0
    vals, err, n = cumulative_quad(f, [a, b], tol, sub_first=sub_a, sub_last=sub_b,
                                   max_panels=max_panels)
    return float(vals[-1]), err, n


# -- Remark on v' from the first integral ---------------------------------

def vprime_from_first_integral(E: float, F: float, G: float, c1: float, branch: int = 1) -> float:
    """Solve (F + G v') / sqrt(E + 2F v' + G v'^2) = c1 for v' at a point.

    Returns [2F(c1^2 - G) +- sqrt(D)] / (2G(G - c1^2)) with
    D = 4F^2 (G - c1^2)^2 - 4G (G - c1^2)(F^2 - E c1^2); ``branch`` picks
    the sign.  Both roots of the squared relation are returned as asked,
    so only one of them carries the sign of ``c1``.
    """
    if branch not in (1, -1):
        raise DomainError("branch must be +1 or -1")
    gc = G - c1 * c1
    denom = 2.0 * G * gc
    scale = max(G * G, abs(G * c1 * c1), 1e-300)
    if abs(denom) <= 1e-14 * scale:
        raise TurningPointError(f"G(G - c1^2) = 0 (G={G!r}, c1={c1!r}): turning point")
    disc = 4.0 * F * F * gc * gc - 4.0 * G * gc * (F * F - E * c1 * c1)
    if disc < 0:
        if disc > -1e-14 * max(abs(4.0 * F * F * gc * gc), abs(4.0 * G * gc * E * c1 * c1), 1e-300):
            disc = 0.0
        else:
            raise DomainError(f"c1={c1!r} infeasible here (discriminant {disc:.3e} < 0)")
    return (2.0 * F * (c1 * c1 - G) + branch * math.sqrt(disc)) / denom


# -- quadrature curves ------------------------------------------------------

@dataclass
class QuadratureResult:
    """Samples of a geodesic y(x) found by quadrature.

    ``x`` is the independent coordinate (named by ``variable``), ``y`` the
    dependent one, anchored so that y[0] = 0.  ``slope`` is dy/dx (infinite
    at a turning point), ``s`` the arc length from the first sample, and
    ``E``, ``G`` the metric coefficients at the samples.
    """

    variable: str
    x: np.ndarray
    y: np.ndarray
    slope: np.ndarray
    s: np.ndarray
    E: np.ndarray
    G: np.ndarray
    c1: float
    branch: int
    tol: float
    turning: tuple[bool, bool]
    error: float
    meta: dict = field(default_factory=dict)

    @property
    def u(self) -> np.ndarray:
        return self.x if self.variable == "u" else self.y

    @property
    def v(self) -> np.ndarray:
        return self.y if self.variable == "u" else self.x

    @property
    def length(self) -> float:
        return float(self.s[-1])

    def unit_velocity(self) -> tuple[np.ndarray, np.ndarray]:
        """(du/ds, dv/ds) along the direction of increasing sample index."""
        sign = 1.0 if self.x[-1] >= self.x[0] else -1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / self.slope
        if self.variable == "u":
            # ds/du = sqrt(E + G v'^2)
            dx = sign / np.sqrt(self.E + self.G * self.slope**2)
            dy = sign * np.sign(self.slope) / np.sqrt(self.E * inv**2 + self.G)
            return dx, dy
        # ds/dv = sqrt(E u'^2 + G)
        dx = sign / np.sqrt(self.E * self.slope**2 + self.G)
        dy = sign * np.sign(self.slope) / np.sqrt(self.E + self.G * inv**2)
        return dy, dx

    def clairaut(self) -> np.ndarray:
        """The first integral at each sample; equals c1 up to rounding and quadrature error."""
        du, dv = self.unit_velocity()
        sign = 1.0 if self.x[-1] >= self.x[0] else -1.0
        # with unit speed and F = 0 the conserved momentum is G dv/ds (or E du/ds)
        return sign * (self.G * dv if self.variable == "u" else self.E * du)

    def to_curve(self, surface):
        """The samples as a unit-speed :class:`GeodesicCurve` on ``surface``."""
        from .geodesic import GeodesicCurve
        from .surface import eval_point
        du, dv = self.unit_velocity()
        pts = np.array([eval_point(surface, a, b) for a, b in zip(self.u, self.v)])
        return GeodesicCurve(self.s.copy(), self.u.copy(), self.v.copy(), du, dv, pts,
                             self.s.copy(), None, dict(self.meta, surface=surface.name))


def _sample_points(x1: float, x2: float, samples) -> np.ndarray:
    if np.ndim(samples) == 0:
        n = int(samples)
        if n < 2:
            raise DomainError("need at least 2 samples")
        return np.linspace(x1, x2, n)
    xs = np.asarray(samples, dtype=float)
    if len(xs) < 2 or abs(xs[0] - x1) > 1e-12 * max(1, abs(x1)) \
            or abs(xs[-1] - x2) > 1e-12 * max(1, abs(x2)):
        raise DomainError("explicit samples must run from the lower to the upper limit")
    d = np.diff(xs) * (1 if x2 >= x1 else -1)
    if np.any(d <= 0):
        raise DomainError("explicit samples must be strictly monotone")
    return xs


TAYLOR_BAND = 1e-5


def _quadrature(variable, metric, key_jet, x1, x2, c1, branch, tol, samples, kind):
    """Shared driver.

    ``metric(x)`` returns (E, G) as functions of the independent variable and
    ``key_jet(x)`` a jet of the constrained coefficient (G for v(u), E for
    u(v)).  Within TAYLOR_BAND of a turning point the margin key - c1^2 is
    taken from its Taylor expansion there, which avoids the cancellation of
    subtracting two nearly equal numbers.
    """
    if branch not in (1, -1):
        raise DomainError("branch must be +1 or -1")
    if not (math.isfinite(x1) and math.isfinite(x2)) or x1 == x2:
        raise DomainError(f"degenerate range [{x1}, {x2}]")
    c2 = c1 * c1
    floor = 4 * np.finfo(float).eps
    k = 1 if variable == "u" else 0
    label = "G" if k else "E"

    def coeffs(x):
        try:
            E, G = metric(x)
        except ExprError as exc:
            raise DomainError(f"metric undefined at {variable}={x!r}: {exc}") from None
        if not (E > 0 and G > 0):
            raise DomainError(f"metric not positive at {variable}={x!r} (E={E}, G={G})")
        return E, G

    xs = _sample_points(x1, x2, samples)
    x1, x2 = float(xs[0]), float(xs[-1])

    scale = max(c2, 1.0)
    turning = []
    expansions = []
    for x0 in (x1, x2):
        q = coeffs(x0)[k] - c2
        if q < -1e-12 * scale:
            raise DomainError(f"c1={c1!r} infeasible at {variable}={x0!r}: "
                              f"{label} - c1^2 = {q:.3e}")
        hit = c2 > 0 and q <= 1e-10 * scale
        turning.append(hit)
        if hit:
            try:
                j = key_jet(x0)
            except ExprError as exc:
                raise DomainError(f"metric undefined at {variable}={x0!r}: {exc}") from None
            expansions.append((x0, q, j.du, 0.5 * j.duu))

    def margin(x, key):
        for x0, q0, q1, q2 in expansions:
            d = x - x0
            if abs(d) <= TAYLOR_BAND:
                return q0 + d * (q1 + d * q2)
        return key - c2

    def slope_of(x, E, G):
        key = (E, G)[k]
        q = margin(x, key)
        if q < floor * key:
            # within rounding of a turning point the margin is noise: clip it
            if q <= -1e-12 * scale:
                return math.nan
            q = floor * key
        # c1 sqrt(E/(G(G-c1^2))) for v(u); c1 sqrt(G/(E(E-c1^2))) for u(v)
        other = (G, E)[k]
        return branch * c1 * math.sqrt(other / (key * q))

    def dy(x):
        return slope_of(x, *coeffs(x))

    def ds(x):
        E, G = coeffs(x)
        m = slope_of(x, E, G)
        return math.sqrt(E + G * m * m) if k else math.sqrt(E * m * m + G)

    # the open interval must stay strictly feasible
    for x in np.linspace(x1, x2, 4 * (len(xs) - 1) + 1)[1:-1]:
        x = float(x)
        if not margin(x, coeffs(x)[k]) > 0:
            raise DomainError(f"c1={c1!r} infeasible at {variable}={x!r}: "
                              "the geodesic cannot pass here")

    n = len(xs)
    try:
        y, ey, py = cumulative_quad(dy, xs, tol, sub_first=turning[0], sub_last=turning[1])
        s, es, ps = cumulative_quad(ds, xs, tol, sub_first=turning[0], sub_last=turning[1])
    except QuadratureError as exc:
        raise QuadratureError(f"{kind}: {exc}") from None
    s = np.abs(s)
    E = np.empty(n)
    G = np.empty(n)
    slope = np.empty(n)
    for i, x in enumerate(xs):
        E[i], G[i] = coeffs(float(x))
        if (i == 0 and turning[0]) or (i == n - 1 and turning[1]):
            # exactly at a turning point the slope is unbounded
            slope[i] = math.copysign(math.inf, branch * c1)
        else:
            slope[i] = slope_of(float(x), E[i], G[i])
    meta = {"kind": kind, "c1": c1, "branch": branch, "tol": tol, "samples": n,
            "panels": py + ps, "turning": list(map(bool, turning))}
    return QuadratureResult(variable, xs, y, slope, s, E, G, c1, branch, tol,
                            (bool(turning[0]), bool(turning[1])), ey + es, meta)


def _metric_exprs(E, G, var):
    E, G = as_expr(E, (var,)), as_expr(G, (var,))
    key = G if var == "u" else E

    def metric(x):
        env = {var: x}
        return evaluate(E, env), evaluate(G, env)

    def key_jet(x):
        return eval_jet(key, {var: Jet2.seed(x, 0)})
    return metric, key_jet


def geodesic_quadrature_u(E: Expr | str, G: Expr | str, u1: float, u2: float, c1: float,
                          tol: float = DEFAULT_TOL, *, branch: int = 1,
                          samples=DEFAULT_SAMPLES) -> QuadratureResult:
    """v(u) = c1 int_{u1}^{u} sqrt(E / (G (G - c1^2))) du for a metric E(u), G(u), F = 0."""
    return _quadrature("u", *_metric_exprs(E, G, "u"), u1, u2, c1, branch, tol, samples, "quadrature-u")


def geodesic_quadrature_v(E: Expr | str, G: Expr | str, v1: float, v2: float, c1: float,
                          tol: float = DEFAULT_TOL, *, branch: int = 1,
                          samples=DEFAULT_SAMPLES) -> QuadratureResult:
    """u(v) = c1 int_{v1}^{v} sqrt(G / (E^2 - c1^2 E)) dv for a metric E(v), G(v), F = 0."""
    return _quadrature("v", *_metric_exprs(E, G, "v"), v1, v2, c1, branch, tol, samples, "quadrature-v")


def geodesic_revolution(f: Expr | str, u1: float, u2: float, c1: float,
                        tol: float = DEFAULT_TOL, *, branch: int = 1,
                        samples=DEFAULT_SAMPLES) -> QuadratureResult:
    """v(u) = c1 int sqrt(1 + f'^2) / (f sqrt(f^2 - c1^2)) du on the surface swept by y = f(x).

    The surface is parametrized as (u, f(u) cos v, f(u) sin v); f' comes
    from jets of ``f``.
    """
    f = as_expr(f, ("u",))

    def metric(x):
        j = eval_jet(f, {"u": Jet2.seed(x, 0)})
        if not j.val > 0:
            raise DomainError(f"profile must be positive; f({x!r}) = {j.val}")
        return 1.0 + j.du * j.du, j.val * j.val

    def key_jet(x):
        j = eval_jet(f, {"u": Jet2.seed(x, 0)})
        return j * j

    res = _quadrature("u", metric, key_jet, u1, u2, c1, branch, tol, samples, "revolution")
    res.meta["profile"] = str(f)
    return res
