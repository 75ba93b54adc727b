import math

import numpy as np
import pytest

from artifact import surface as surf
from artifact.analytic import cylinder_helix, great_circle, sphere_point
from artifact.errors import ConvergenceError, DomainError, IntegrationError, SingularPointError
from artifact.geodesic import (GeodesicCurve, GeodesicState, connect_geodesic, derivative,
                               el_residual_geodesic, geodesic_rhs, integrate_geodesic,
                               launch_direction, speed)
from artifact.surface import eval_point, fundamental_form

SPHERE = surf.sphere(1.0)
CYL = surf.cylinder(1.0)
PLANE = surf.plane()


def state(u, v, du, dv):
    return GeodesicState(0.0, u, v, du, dv)


def speed_deviation(s, c):
    return max(abs(speed(s, c.state(i)) - 1.0) for i in range(len(c)))


# -- speed and right-hand side ----------------------------------------------

def test_speed_examples():
    assert speed(PLANE, state(0, 0, 3, 4)) == pytest.approx(5.0)
    assert speed(surf.cylinder(2.0), state(0.3, 1.0, 1, 0)) == pytest.approx(2.0)
    assert speed(SPHERE, state(0, math.pi / 2, 1, 0)) == pytest.approx(1.0)
    with pytest.raises(SingularPointError):
        speed(SPHERE, state(0, 0.0, 1, 0))


def test_rhs_examples():
    for s, st in ((PLANE, state(1, 2, 0.3, -0.7)), (CYL, state(1, 2, 0.3, -0.7)),
                  (SPHERE, state(0.4, math.pi / 2, 1, 0))):
        du, dv, ddu, ddv = geodesic_rhs(s, st)
        assert (du, dv) == (st.du, st.dv)
        assert abs(ddu) < 1e-15 and abs(ddv) < 1e-15
    with pytest.raises(SingularPointError):
        geodesic_rhs(SPHERE, state(0, 1e-9, 1, 0))


def test_rhs_sphere_off_equator():
    # u'' = -2 cot(v) u' v', v'' = sin(v) cos(v) u'^2
    v, du, dv = 1.0, 0.4, 0.3
    _, _, ddu, ddv = geodesic_rhs(SPHERE, state(0.2, v, du, dv))
    assert ddu == pytest.approx(-2 * du * dv / math.tan(v), rel=1e-13)
    assert ddv == pytest.approx(math.sin(v) * math.cos(v) * du**2, rel=1e-13)


# -- integration ---------------------------------------------------------------

def test_quarter_equator():
    c = integrate_geodesic(SPHERE, state(0, math.pi / 2, 1, 0), math.pi / 2)
    assert (c.u[-1], c.v[-1]) == pytest.approx((math.pi / 2, math.pi / 2), abs=1e-9)
    assert c.points[-1] == pytest.approx([0, 1, 0], abs=1e-9)
    assert c.length == pytest.approx(math.pi / 2, abs=1e-9)


def test_plane_unit_step():
    c = integrate_geodesic(PLANE, state(0, 0, 1, 0), 1.0)
    assert (c.u[-1], c.v[-1]) == pytest.approx((1.0, 0.0), abs=1e-12)


def test_cylinder_helix_shot():
    r = 1 / math.sqrt(2)
    c = integrate_geodesic(CYL, state(0, 0, r, r), math.sqrt(2) * math.pi)
    assert (c.u[-1], c.v[-1]) == pytest.approx((math.pi, math.pi), abs=1e-9)
    assert np.max(np.abs(c.v - c.u)) < 1e-9
    # the angle is unwrapped past 2 pi
    c = integrate_geodesic(CYL, state(0, 0, 1, 0.01), 10.0)
    assert c.u[-1] > 2 * math.pi


def test_curve_invariants():
    c = integrate_geodesic(SPHERE, state(0.3, 1.0, 0.2, 1.0), 5.0)
    assert np.all(np.diff(c.s) >= 0)
    steps = np.linalg.norm(np.diff(c.points, axis=0), axis=1)
    assert np.all(steps <= np.diff(c.s) + 1e-12)  # chord never exceeds arc
    assert speed_deviation(SPHERE, c) < 1e-8
    # dense output reproduces the nodes and stays unit speed between them
    mid = 0.5 * (c.t[:-1] + c.t[1:])
    y = c.at(mid)
    sp = [speed(SPHERE, state(a, b, p, q)) for a, b, p, q in y[:, :4]]
    # cubic Hermite between nodes: O(h^4) error, not the integrator tolerance
    assert max(abs(x - 1) for x in sp) < 1e-6
    assert np.allclose(c.at(c.t)[:, 0], c.u)


def test_length_normalizes_speed():
    c = integrate_geodesic(PLANE, state(0, 0, 30, 40), 5.0)
    assert (c.u[-1], c.v[-1]) == pytest.approx((3.0, 4.0), abs=1e-12)


@pytest.mark.parametrize("tol", [1e-7, 1e-9])
def test_reversal_symmetry(tol):
    c = integrate_geodesic(SPHERE, state(0.3, 1.1, 0.7, -0.4), 2.5, tol)
    e = c.end
    back = integrate_geodesic(SPHERE, state(e.u, e.v, -e.du, -e.dv), 2.5, tol)
    assert abs(back.u[-1] - c.u[0]) < 10 * tol
    assert abs(back.v[-1] - c.v[0]) < 10 * tol


def test_residuals_shrink_as_tolerance_tightens():
    # no step cap, so the tolerance alone sets the node spacing
    st0 = state(0.3, 1.1, 0.7, -0.4)
    res = [max(el_residual_geodesic(SPHERE, integrate_geodesic(SPHERE, st0, 3.0, tol,
                                                               max_step=math.inf)))
           for tol in (1e-6, 1e-7, 1e-8, 1e-9)]
    assert all(b < a for a, b in zip(res, res[1:]))
    assert res[-1] < res[0] / 50


def test_integration_errors():
    with pytest.raises(DomainError):
        integrate_geodesic(PLANE, state(0, 0, 1, 0), 0.0)
    with pytest.raises(DomainError):
        integrate_geodesic(PLANE, state(0, 0, 0, 0), 1.0)
    with pytest.raises(SingularPointError):
        integrate_geodesic(SPHERE, state(0, 0.0, 1, 0), 1.0)
    # a meridian runs into the pole
    with pytest.raises(IntegrationError) as err:
        integrate_geodesic(SPHERE, state(0, 1.0, 0, -1), 2.0)
    partial = err.value.partial
    assert isinstance(partial, GeodesicCurve) and 0 < partial.length < 1.0
    # leaving a bounded non-periodic domain
    cone = surf.revolution("u", (1.0, 2.0))
    with pytest.raises(IntegrationError):
        integrate_geodesic(cone, state(1.5, 0.0, 1, 0), 5.0)


# -- connecting two points ---------------------------------------------------

def test_connect_examples():
    c = connect_geodesic(PLANE, (0, 0), (3, 4))
    assert c.length == pytest.approx(5.0, abs=1e-9)
    assert np.max(np.abs(c.v - 4 / 3 * c.u)) < 1e-9
    c = connect_geodesic(SPHERE, (0, math.pi / 2), (math.pi / 2, math.pi / 2))
    assert c.length == pytest.approx(math.pi / 2, abs=1e-8)
    c = connect_geodesic(CYL, (0, 0), (math.pi, 2))
    assert c.length == pytest.approx(math.sqrt(math.pi**2 + 4), abs=1e-8)


def test_connect_same_point():
    c = connect_geodesic(SPHERE, (1.0, 1.0), (1.0, 1.0))
    assert c.length == 0.0 and len(c) == 1


def test_connect_ends_at_target():
    p0, p1 = (0.4, 0.9), (2.0, 2.1)
    c = connect_geodesic(SPHERE, p0, p1, tol=1e-9)
    assert np.linalg.norm(c.points[-1] - eval_point(SPHERE, *p1)) < 1e-9
    gc = great_circle(sphere_point(*p0), sphere_point(*p1))
    assert c.length == pytest.approx(gc.length, rel=1e-8)
    assert c.meta["seeds"] == 32


def test_connect_reports_longer_alternatives():
    # seed scans with long enough shots see both arcs of the great circle
    p0, p1 = (0.0, 1.2), (2.0, 1.7)
    c = connect_geodesic(SPHERE, p0, p1, max_length=2 * math.pi - 0.5)
    gc = great_circle(sphere_point(*p0), sphere_point(*p1))
    assert c.length == pytest.approx(gc.length, rel=1e-8)
    alts = c.meta["alternatives"]
    assert alts and all(alt >= c.length for alt in alts)
    assert min(alts) == pytest.approx(2 * math.pi - gc.length, rel=1e-6)


def test_connect_failure_has_diagnostics():
    with pytest.raises(ConvergenceError) as err:
        connect_geodesic(PLANE, (0, 0), (3, 4), max_iter=0)
    assert "seed_miss" in err.value.diagnostics
    with pytest.raises(SingularPointError):
        connect_geodesic(SPHERE, (0, 0.0), (1, 1))


def test_connect_is_deterministic():
    a = connect_geodesic(SPHERE, (0.1, 0.5), (1.0, 2.0))
    b = connect_geodesic(SPHERE, (0.1, 0.5), (1.0, 2.0))
    assert a.length == b.length and np.array_equal(a.u, b.u)


def test_plane_connect_random_pairs():
    rng = np.random.default_rng(21)
    for _ in range(10):
        p0, p1 = rng.uniform(-5, 5, 2), rng.uniform(-5, 5, 2)
        c = connect_geodesic(PLANE, p0, p1)
        assert abs(c.length - np.linalg.norm(p1 - p0)) < 1e-9


def test_local_minimality():
    p0, p1 = (0.3, 0.8), (1.9, 2.0)
    c = connect_geodesic(SPHERE, p0, p1)
    t = np.linspace(c.t[0], c.t[-1], 4001)
    y = c.at(t)
    tau = (t - t[0]) / (t[-1] - t[0])

    def polyline(u, v):
        pts = np.array([eval_point(SPHERE, a, b) for a, b in zip(u, v)])
        return np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1))

    base = polyline(y[:, 0], y[:, 1])
    bump = np.sin(np.pi * tau) ** 2
    for du, dv in ((1e-3, 0.0), (0.0, 1e-3), (-1e-3, 1e-3), (0.0, -1e-3)):
        assert polyline(y[:, 0] + du * bump, y[:, 1] + dv * bump) - base > -1e-12


# -- residuals -----------------------------------------------------------------

def test_residual_examples():
    r = 1 / math.sqrt(2)
    helix = integrate_geodesic(CYL, state(0, 0, r, r), 6.0)
    assert max(el_residual_geodesic(CYL, helix)) < 1e-6
    exact = cylinder_helix((0, 0), (3, 2)).to_curve(CYL, 201)
    assert max(el_residual_geodesic(CYL, exact)) < 1e-6
    eq = integrate_geodesic(SPHERE, state(0, math.pi / 2, 1, 0), 3.0)
    assert max(el_residual_geodesic(SPHERE, eq)) < 1e-6


def test_residual_under_nonaffine_retiming():
    # equator traced as u = t^2 on [0.5, 1]
    t = np.linspace(0.5, 1.0, 101)
    c = GeodesicCurve.from_samples(SPHERE, t, t**2, np.full_like(t, math.pi / 2), 2 * t,
                                   np.zeros_like(t))
    ru, rv = el_residual_geodesic(SPHERE, c)
    assert ru < 1e-6 and rv < 1e-6
    # a great circle off the equator, re-timed the same way
    gc = great_circle(sphere_point(0.2, 0.7), sphere_point(1.4, 1.9))
    t = np.linspace(0.5, 1.0, 201)
    s = gc.length * (t**2 - 0.25) / 0.75
    rate = gc.length * 2 * t / 0.75
    uv = gc.coords(s)
    duds, dvds = _unit_velocity(gc, s)
    c = GeodesicCurve.from_samples(SPHERE, t, uv[:, 0], uv[:, 1], duds * rate, dvds * rate)
    assert max(el_residual_geodesic(SPHERE, c)) < 1e-6


def _unit_velocity(gc, s):
    from artifact.surface import tangent_vectors
    uv, T = gc.coords(s), gc.tangents(s)
    out = np.array([np.linalg.lstsq(np.column_stack(tangent_vectors(SPHERE, a, b)), w, rcond=None)[0]
                    for (a, b), w in zip(uv, T)])
    return out[:, 0], out[:, 1]


def test_residual_detects_non_geodesic():
    # a circle of latitude is not a geodesic
    t = np.linspace(0, 1, 101)
    c = GeodesicCurve.from_samples(SPHERE, t, t, np.full_like(t, 1.0), np.ones_like(t),
                                   np.zeros_like(t))
    assert el_residual_geodesic(SPHERE, c)[1] > 0.1
    with pytest.raises(ValueError):
        el_residual_geodesic(SPHERE, GeodesicCurve.from_samples(SPHERE, t[:4], t[:4], t[:4] + 1,
                                                                t[:4], t[:4]))


def test_derivative_is_high_order():
    t = np.sort(np.random.default_rng(0).uniform(0, 1, 60))
    t[0], t[-1] = 0.0, 1.0
    d = derivative(t, np.sin(3 * t))
    assert np.max(np.abs(d - 3 * np.cos(3 * t))) < 1e-3


def test_launch_direction_is_unit():
    for s, (u, v) in ((SPHERE, (0.5, 1.0)), (CYL, (0.0, 0.0)), (surf.cylinder(2.0), (1.0, 0.0))):
        for th in np.linspace(0, 2 * math.pi, 7):
            du, dv = launch_direction(s, u, v, th)
            ff = fundamental_form(s, u, v)
            assert ff.E * du**2 + 2 * ff.F * du * dv + ff.G * dv**2 == pytest.approx(1.0)
