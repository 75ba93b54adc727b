"""Verification suites: numeric results checked against closed-form oracles.

Each suite returns a list of :class:`Check` records.  The command line
``verify`` command and the acceptance tests both call these functions, so
the thresholds live in one place.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import analytic, surface as surf
from .errors import IntegrationError
from .geodesic import (GeodesicState, connect_geodesic, derivative, el_residual_geodesic,
                       integrate_geodesic, launch_direction)
from .revolution import geodesic_quadrature_v, geodesic_revolution
from .variational import (DiscreteCurve, FunctionalSpec, direct_minimize, functional_eval,
                          norm_c0, norm_dn)


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    limit: float
    detail: str = ""
    seconds: float = 0.0
    cmp: str = "<"  # "<": value must stay below limit; ">=": value must reach it

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        bound = "limit" if self.cmp == "<" else "at least"
        return f"{mark} {self.name}: {self.value:.6g} ({bound} {self.limit:.6g}) {self.detail}".rstrip()

    @property
    def margin(self) -> float:
        """How much of the allowance is used: 1 is on the boundary, above 1 fails."""
        if self.cmp == "<":
            return self.value / self.limit if self.limit else math.inf
        return self.limit / self.value if self.value else math.inf

    def as_dict(self) -> dict:
        return asdict(self)


def _check(name, value, limit, detail="", t0=None, cmp="<"):
    ok = value < limit if cmp == "<" else value >= limit
    return Check(name, bool(ok and math.isfinite(value)), float(value), float(limit), detail,
                 time.perf_counter() - t0 if t0 is not None else 0.0, cmp)


# -- sphere -----------------------------------------------------------------

def random_sphere_pairs(n: int, rng, sep=(0.1, 3.0)):
    """Pairs of unit vectors with angular separation uniform in ``sep``."""
    out = []
    while len(out) < n:
        p0 = rng.normal(size=3)
        p0 /= np.linalg.norm(p0)
        w = rng.normal(size=3)
        w -= (w @ p0) * p0
        w /= np.linalg.norm(w)
        theta = rng.uniform(*sep)
        p1 = math.cos(theta) * p0 + math.sin(theta) * w
        c0, c1 = analytic.sphere_coords(p0), analytic.sphere_coords(p1)
        # stay off the coordinate poles, where the chart degenerates
        if min(c0[1], c1[1], math.pi - c0[1], math.pi - c1[1]) < 1e-3:
            continue
        out.append((c0, c1))
    return out


def great_circle_suite(pairs: int = 100, seed: int = 0, tol: float = 1e-9) -> list[Check]:
    """connect_geodesic on the unit sphere against great-circle arcs."""
    rng = np.random.default_rng(seed)
    s = surf.sphere(1.0)
    t0 = time.perf_counter()
    worst_len, worst_plane, failures = 0.0, 0.0, 0
    for c0, c1 in random_sphere_pairs(pairs, rng):
        gc = analytic.great_circle(analytic.sphere_point(*c0), analytic.sphere_point(*c1))
        try:
            curve = connect_geodesic(s, c0, c1, tol=tol)
        except Exception:  # noqa: BLE001 - any failure counts against the suite
            failures += 1
            continue
        worst_len = max(worst_len, abs(curve.length - gc.length) / gc.length)
        worst_plane = max(worst_plane, float(np.max(np.abs(curve.points @ gc.constants["normal"]))))
    elapsed = time.perf_counter() - t0
    detail = f"{pairs} pairs, {failures} failed"
    return [
        _check("great-circle length (relative)", worst_len if not failures else math.inf, 1e-6, detail),
        _check("great-circle plane distance", worst_plane if not failures else math.inf, 1e-6, detail),
        Check("great-circle runtime", elapsed < 30.0, elapsed, 30.0, "seconds", elapsed),
    ]


def sphere_closed_form(v, c1):
    """-arcsin(cot v / sqrt(1/c1^2 - 1)) + pi/2: zero at the turning colatitude arcsin(c1)."""
    k = math.sqrt(1.0 / (c1 * c1) - 1.0)
    arg = np.clip(1.0 / np.tan(v) / k, -1.0, 1.0)
    return -np.arcsin(arg) + math.pi / 2


def sphere_quadrature_suite(c1s=(0.3, 0.6, 0.9), points: int = 50, tol: float = 1e-10) -> list[Check]:
    """u(v) by quadrature on the unit sphere against the arcsine closed form."""
    checks = []
    for c1 in c1s:
        t0 = time.perf_counter()
        v0 = math.asin(c1)
        xs = np.linspace(v0, math.pi - v0, points + 2)
        res = geodesic_quadrature_v("sin(v)^2", "1", v0, math.pi - v0, c1, tol, samples=xs)
        err = float(np.max(np.abs(res.y[1:-1] - sphere_closed_form(res.x[1:-1], c1))))
        checks.append(_check(f"sphere quadrature c1={c1}", err, 1e-8,
                             f"{points} interior points", t0))
    # turning point to equator is a quarter turn for any c1 (the c1 -> 1 limit is the equator)
    t0 = time.perf_counter()
    worst = 0.0
    for c1 in (0.9, 0.99, 0.999):
        res = geodesic_quadrature_v("sin(v)^2", "1", math.asin(c1), math.pi / 2, c1, tol, samples=3)
        worst = max(worst, abs(res.y[-1] - math.pi / 2))
    checks.append(_check("turning point to equator = pi/2", worst, 1e-8, "c1 in 0.9..0.999", t0))
    return checks


def sphere_suite(pairs: int = 100, seed: int = 0) -> list[Check]:
    return great_circle_suite(pairs, seed) + sphere_quadrature_suite()


# -- cylinder ---------------------------------------------------------------

def helix_suite(states: int = 20, seed: int = 1, tol: float = 1e-9) -> list[Check]:
    """Shots on the unit cylinder stay on z = c1*phi + c2; connect matches the unrolled length."""
    rng = np.random.default_rng(seed)
    s = surf.cylinder(1.0)
    t0 = time.perf_counter()
    worst = 0.0
    done = 0
    while done < states:
        theta = rng.uniform(0, 2 * math.pi)
        if abs(math.cos(theta)) < 0.3:
            continue  # near-vertical launches: c1 fit from two samples is ill-posed
        phi0, z0, length = rng.uniform(0, 2 * math.pi), rng.uniform(-2, 2), rng.uniform(1, 10)
        du, dv = launch_direction(s, phi0, z0, theta)
        c = integrate_geodesic(s, GeodesicState(0.0, phi0, z0, du, dv), length, tol)
        phi, z = c.u, c.points[:, 2]
        c1 = (z[1] - z[0]) / (phi[1] - phi[0])
        c2 = z[0] - c1 * phi[0]
        worst = max(worst, float(np.max(np.abs(z - (c1 * phi + c2)))))
        done += 1
    checks = [_check("helix fit |z - (c1 phi + c2)|", worst, 1e-8, f"{states} shots", t0)]
    t0 = time.perf_counter()
    c = connect_geodesic(s, (0.0, 0.0), (math.pi, 2.0), tol=tol)
    checks.append(_check("helix connect (0,0)->(pi,2) length", abs(c.length - math.hypot(math.pi, 2.0)),
                         1e-8, f"length {c.length:.12f}", t0))
    # the vertical ruling (dphi = 0) is the c1 -> inf member of the family
    du, dv = launch_direction(s, 0.5, 0.0, math.pi / 2)
    c = integrate_geodesic(s, GeodesicState(0.0, 0.5, 0.0, du, dv), 5.0, tol)
    checks.append(_check("vertical ruling keeps phi", float(np.max(np.abs(c.u - 0.5))), 1e-12))
    return checks


# -- plane ------------------------------------------------------------------

def plane_suite(pairs: int = 100, seed: int = 2, tol: float = 1e-9) -> list[Check]:
    rng = np.random.default_rng(seed)
    s = surf.plane()
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(pairs):
        p0, p1 = rng.uniform(-5, 5, 2), rng.uniform(-5, 5, 2)
        c = connect_geodesic(s, tuple(p0), tuple(p1), tol=tol)
        worst = max(worst, abs(c.length - analytic.plane_line(p0, p1).length))
    return [_check("plane connect = segment length", worst, 1e-9, f"{pairs} pairs", t0)]


# -- surfaces of revolution -------------------------------------------------

REVOLUTION_CASES = (("u", 0.3), ("2+cos(u)", 0.8))


def _revolution_routes(profile: str, c1: float, u1=0.5, u2=2.5, tol=1e-9):
    """The quadrature curve and the ODE curve launched with the same initial data."""
    q = geodesic_revolution(profile, u1, u2, c1, 1e-10, samples=1601)
    s = surf.revolution(profile, (0.25, 3.0))
    m = q.slope[0]
    du0, dv0 = 1.0, m
    ff = surf.fundamental_form(s, u1, 0.0)
    sp = math.sqrt(ff.E * du0**2 + ff.G * dv0**2)
    ode = integrate_geodesic(s, GeodesicState(0.0, u1, 0.0, du0 / sp, dv0 / sp), q.length, tol)
    return s, q, ode


def _clairaut_variation(values) -> float:
    values = np.asarray(values)
    return float(np.ptp(values) / abs(np.mean(values)))


def revolution_suite(tol: float = 1e-9) -> list[Check]:
    """Quadrature along the profile versus integration of the geodesic equations."""
    checks = []
    for profile, c1 in REVOLUTION_CASES:
        t0 = time.perf_counter()
        s, q, ode = _revolution_routes(profile, c1, tol=tol)
        at = ode.at(q.s)
        gap = float(np.max(np.hypot(at[:, 0] - q.u, at[:, 1] - q.v)))
        checks.append(_check(f"f={profile}: quadrature vs ODE (pointwise)", gap, 1e-5,
                             f"c1={c1}, length {q.length:.6g}", t0))
        rq = max(el_residual_geodesic(s, q.to_curve(s)))
        ro = max(el_residual_geodesic(s, ode))
        checks.append(_check(f"f={profile}: residuals, quadrature route", rq, 1e-5))
        checks.append(_check(f"f={profile}: residuals, ODE route", ro, 1e-5))
        # Clairaut G v'/sqrt(E + G v'^2): ODE from the state, quadrature from differenced samples
        ff = [surf.fundamental_form(s, a, b) for a, b in zip(ode.u, ode.v)]
        G = np.array([f.G for f in ff])
        E = np.array([f.E for f in ff])
        clo = G * ode.dv / np.sqrt(E * ode.du**2 + G * ode.dv**2)
        vq = derivative(q.x, q.y)
        clq = q.G * vq / np.sqrt(q.E + q.G * vq**2)
        checks.append(_check(f"f={profile}: Clairaut variation, ODE route", _clairaut_variation(clo), 1e-7))
        checks.append(_check(f"f={profile}: Clairaut variation, quadrature route",
                             _clairaut_variation(clq), 1e-7))
    # Example: constant profile gives a linear v(u), the helix family
    q = geodesic_revolution("2", 0.0, 3.0, 1.0, 1e-10, samples=31)
    slope = 1.0 / (2.0 * math.sqrt(3.0))
    checks.append(_check("constant profile: v linear in u", float(np.max(np.abs(q.y - slope * q.x))), 1e-12))
    return checks


# -- direct method ----------------------------------------------------------

def direct_suite(ns=(15, 31, 63, 127)) -> list[Check]:
    t0 = time.perf_counter()
    f = FunctionalSpec("p^2 + y^2", 0.0, 1.0, 0.0, 1.0)
    errs = []
    for n in ns:
        c = direct_minimize(f, n)
        errs.append(float(np.max(np.abs(c.y - np.sinh(c.x) / math.sinh(1.0)))))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    checks = [_check("p^2+y^2: error ratio per doubling", min(ratios), 3.5,
                     "errors " + ", ".join(f"{e:.3g}" for e in errs), t0, cmp=">=")]
    t0 = time.perf_counter()
    g = FunctionalSpec("sqrt(1 + p^2)", 0.0, 1.0, 0.0, 1.0)
    c = direct_minimize(g, 31)
    checks.append(_check("sqrt(1+p^2): straight line at n=31", float(np.max(np.abs(c.y - c.x))), 1e-8, "", t0))
    checks.append(_check("sqrt(1+p^2): J = sqrt(2)", abs(functional_eval(g, c) - math.sqrt(2)), 1e-10))
    return checks


# -- jets versus finite differences ------------------------------------------

def builtin_surfaces():
    return [surf.plane(), surf.cylinder(2.0), surf.sphere(1.0),
            surf.revolution("2 + cos(u)", (0.0, 2 * math.pi))]


def _random_points(s, n, rng, margin):
    out = []
    while len(out) < n:
        u = rng.uniform(s.u_range.lo + (0 if s.u_range.periodic else margin),
                        s.u_range.hi - (0 if s.u_range.periodic else margin))
        v = rng.uniform(s.v_range.lo + (0 if s.v_range.periodic else margin),
                        s.v_range.hi - (0 if s.v_range.periodic else margin))
        if surf.regularity_check(s, u, v).det > 1e-6:
            out.append((u, v))
    return out


def _rel(a, b) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1.0)


def ad_suite(points: int = 200, seed: int = 3, surfaces=None, h: float = 1e-5) -> list[Check]:
    """E, F, G and their partials from jets against central differences."""
    rng = np.random.default_rng(seed)
    checks = []
    for s in surfaces or builtin_surfaces():
        t0 = time.perf_counter()
        worst_form, worst_part = 0.0, 0.0
        for u, v in _random_points(s, points, rng, 10 * h):
            ff = surf.fundamental_form(s, u, v)
            ru = (surf.eval_point(s, u + h, v) - surf.eval_point(s, u - h, v)) / (2 * h)
            rv = (surf.eval_point(s, u, v + h) - surf.eval_point(s, u, v - h)) / (2 * h)
            for a, b in ((ff.E, ru @ ru), (ff.F, ru @ rv), (ff.G, rv @ rv)):
                worst_form = max(worst_form, _rel(a, b))
            fu = (surf.fundamental_form(s, u + h, v), surf.fundamental_form(s, u - h, v))
            fv = (surf.fundamental_form(s, u, v + h), surf.fundamental_form(s, u, v - h))
            for k in ("E", "F", "G"):
                worst_part = max(worst_part,
                                 _rel(getattr(ff, k + "_u"), (getattr(fu[0], k) - getattr(fu[1], k)) / (2 * h)),
                                 _rel(getattr(ff, k + "_v"), (getattr(fv[0], k) - getattr(fv[1], k)) / (2 * h)))
        detail = f"{points} points"
        checks.append(_check(f"{s.name}: E, F, G vs FD tangents", worst_form, 1e-5, detail, t0))
        checks.append(_check(f"{s.name}: partials vs FD", worst_part, 1e-5, detail))
    return checks


# -- speed ------------------------------------------------------------------

def speed_suite(per_surface: int = 25, seed: int = 4, tol: float = 1e-9, surfaces=None) -> list[Check]:
    """Integrated geodesics of length <= 10 keep unit speed."""
    rng = np.random.default_rng(seed)
    checks = []
    for s in surfaces or builtin_surfaces():
        t0 = time.perf_counter()
        worst, partial = 0.0, 0
        for u, v in _random_points(s, per_surface, rng, 0.1):
            du, dv = launch_direction(s, u, v, rng.uniform(0, 2 * math.pi))
            try:
                c = integrate_geodesic(s, GeodesicState(0.0, u, v, du, dv), rng.uniform(0.5, 10.0), tol)
            except IntegrationError as exc:
                if exc.partial is None:
                    continue
                c, partial = exc.partial, partial + 1
            ff = [surf.fundamental_form(s, a, b) for a, b in zip(c.u, c.v)]
            sp = np.sqrt([f.E * a * a + 2 * f.F * a * b + f.G * b * b for f, a, b in zip(ff, c.du, c.dv)])
            worst = max(worst, float(np.max(np.abs(sp - 1.0))))
        checks.append(_check(f"{s.name}: max |speed - 1|", worst, 1e-8,
                             f"{per_surface} curves, {partial} left the domain", t0))
    return checks


# -- discrete norms and localization ------------------------------------------

def _random_curve(rng, n=None, a=None, b=None):
    n = int(rng.integers(4, 60)) if n is None else n
    a = rng.uniform(-2, 2) if a is None else a
    b = a + rng.uniform(0.5, 3) if b is None else b
    return DiscreteCurve(a, b, rng.normal(size=n + 2))


def norms_suite(trials: int = 200, seed: int = 5) -> list[Check]:
    rng = np.random.default_rng(seed)
    norms = {"c0": lambda y, z=None: norm_c0(y, z)}
    for k in (1, 2, 3):
        norms[f"d{k}"] = (lambda k: lambda y, z=None: norm_dn(y, z, k))(k)
    checks = []
    for name, N in norms.items():
        t0 = time.perf_counter()
        worst = 0.0
        bad = 0
        for _ in range(trials):
            n = int(rng.integers(4, 40))
            a = rng.uniform(-1, 1)
            b = a + rng.uniform(0.5, 2)
            y, z = _random_curve(rng, n, a, b), _random_curve(rng, n, a, b)
            lam = rng.normal() * 3
            ny, nz = N(y), N(z)
            scale = ny + nz
            if ny < 0 or N(y, y) != 0.0 or not N(y, z) > 0:
                bad += 1
            ly = DiscreteCurve(a, b, lam * y.y)
            worst = max(worst, abs(N(ly) - abs(lam) * ny) / max(abs(lam) * ny, 1e-300))
            yz = DiscreteCurve(a, b, y.y + z.y)
            worst = max(worst, (N(yz) - scale) / scale)
        checks.append(_check(f"norm {name}: axioms", worst if not bad else math.inf, 1e-12,
                             f"{trials} random pairs, {bad} definiteness/sign failures", t0))
    return checks


LAGRANGIANS = ("p^2", "sqrt(1 + p^2)", "x * sqrt(1 + p^2)")


def localization_suite(curves: int = 50, seed: int = 6) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []
    for L in LAGRANGIANS:
        t0 = time.perf_counter()
        worst = 0.0
        for _ in range(curves):
            c = _random_curve(rng)
            k = int(rng.integers(1, c.n + 1))
            left, right = c.split(k)
            f = FunctionalSpec(L, c.a, c.b, c.y[0], c.y[-1])
            whole = functional_eval(f, c)
            parts = functional_eval(f.restrict(left), left) + functional_eval(f.restrict(right), right)
            worst = max(worst, abs(parts - whole) / max(1.0, abs(whole)))
        checks.append(_check(f"localization F={L}", worst, 1e-12, f"{curves} random curves", t0))
    # the center-of-mass ratio is a quotient of integrals, so it does not split
    c = DiscreteCurve.linear(2.0, 4.0, 0.0, 1.0, 19)
    left, right = c.split(10)

    def ratio(cc):
        num = functional_eval(FunctionalSpec(LAGRANGIANS[2], cc.a, cc.b, cc.y[0], cc.y[-1]), cc)
        den = functional_eval(FunctionalSpec(LAGRANGIANS[1], cc.a, cc.b, cc.y[0], cc.y[-1]), cc)
        return num / den
    gap = abs(ratio(left) + ratio(right) - ratio(c))
    checks.append(_check("center-of-mass ratio is not additive", gap, 1e-6, "", cmp=">="))
    return checks


SUITES = {
    "sphere": sphere_suite,
    "cylinder": helix_suite,
    "plane": plane_suite,
    "revolution": revolution_suite,
    "direct": direct_suite,
    "ad": ad_suite,
    "speed": speed_suite,
    "norms": norms_suite,
    "localization": localization_suite,
}
SURFACE_SUITES = ("ad", "speed")


def _run_one(name, surface=None):
    fn = SUITES[name]
    if surface is not None and name in SURFACE_SUITES:
        return fn(surfaces=[surface])
    return fn()


def run_suites(names, surface=None, jobs: int = 1) -> list[tuple[str, list[Check]]]:
    """Run suites by name; results come back in the order requested."""
    names = list(SUITES) if list(names) == ["all"] else list(names)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(", ".join(unknown))
    if jobs > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, names, [surface] * len(names)))
    else:
        results = [_run_one(n, surface) for n in names]
    return list(zip(names, results))
