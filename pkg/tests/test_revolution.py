import math

import numpy as np
import pytest

from artifact import surface as surf
from artifact.errors import DomainError, QuadratureError, TurningPointError
from artifact.geodesic import GeodesicState, el_residual_geodesic, integrate_geodesic
from artifact.revolution import (GAUSS, KRONROD, NODES, adaptive_quad, cumulative_quad,
                                 geodesic_quadrature_u, geodesic_quadrature_v,
                                 geodesic_revolution, gk15, vprime_from_first_integral)
from artifact.verify import sphere_closed_form


def cone_oracle(u1, u, c1):
    """Unroll E=2, G=u^2: slant radius r = sqrt2*u, polar angle v/sqrt2, line at distance sqrt2*c1."""
    return math.sqrt(2) * (math.acos(c1 / u) - math.acos(c1 / u1))


# -- the pointwise solve ----------------------------------------------------

def test_vprime_examples():
    assert vprime_from_first_integral(1.0, 0.0, 1.0, 1 / math.sqrt(2)) == pytest.approx(1.0)
    with pytest.raises(TurningPointError):
        vprime_from_first_integral(1.0, 0.0, 0.25, 0.5)
    assert vprime_from_first_integral(2.0, 0.0, 4.0, 1.0) == pytest.approx(math.sqrt(2) / (2 * math.sqrt(3)))
    assert vprime_from_first_integral(2.0, 0.0, 4.0, 1.0, -1) == pytest.approx(-math.sqrt(2) / (2 * math.sqrt(3)))


def test_vprime_solves_the_first_integral_with_f():
    E, F, G = 1.3, 0.4, 2.0
    for c1 in (0.3, 0.9, -0.7):
        roots = [vprime_from_first_integral(E, F, G, c1, b) for b in (1, -1)]
        vals = [(F + G * w) / math.sqrt(E + 2 * F * w + G * w * w) for w in roots]
        # squaring admits c1 and -c1; one root carries each sign
        assert sorted(vals) == pytest.approx(sorted([c1, -c1]), abs=1e-12)


def test_vprime_errors():
    with pytest.raises(DomainError):
        # D = 4 c1^2 (G - c1^2)(EG - F^2) < 0 once c1^2 > G
        vprime_from_first_integral(1.0, 0.5, 1.0, 2.0)
    with pytest.raises(DomainError):
        vprime_from_first_integral(1.0, 0.0, 1.0, 0.5, branch=0)


# -- Gauss-Kronrod ----------------------------------------------------------

def test_gk15_tables():
    assert np.sum(KRONROD) == pytest.approx(2.0, abs=1e-15)
    assert np.sum(GAUSS) == pytest.approx(2.0, abs=1e-15)
    assert np.all(np.diff(NODES) > 0) and NODES[7] == 0.0
    # Kronrod is exact through degree 22, Gauss through 13
    for k in (0, 6, 13, 22):
        exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
        assert np.sum(KRONROD * NODES**k) == pytest.approx(exact, abs=1e-14)
    for k in (0, 6, 12):
        assert np.sum(GAUSS * NODES**k) == pytest.approx(2.0 / (k + 1), abs=1e-14)


def test_gk15_and_adaptive():
    val, err = gk15(np.exp, 0.0, 1.0)
    assert val == pytest.approx(math.e - 1, rel=1e-15) and err < 1e-12
    val, err, n = adaptive_quad(lambda x: math.cos(30 * x), 0.0, 2.0, 1e-12)
    assert abs(val - math.sin(60) / 30) < 1e-12 and n > 1


def test_endpoint_singularities():
    # int_0^1 1/sqrt(x) = 2 and int_0^1 1/sqrt(1-x^2) = pi/2
    val, _, _ = adaptive_quad(lambda x: 1 / math.sqrt(x), 0.0, 1.0, 1e-12, sub_a=True)
    assert abs(val - 2) < 1e-11
    val, _, _ = adaptive_quad(lambda x: 1 / math.sqrt(1 - x * x), 0.0, 1.0, 1e-12, sub_b=True)
    assert abs(val - math.pi / 2) < 1e-11


def test_cumulative_quad():
    xs = np.linspace(0, 3, 31)
    vals, err, _ = cumulative_quad(np.sin, xs, 1e-12)
    assert np.max(np.abs(vals - (1 - np.cos(xs)))) < 1e-12
    assert vals[0] == 0.0 and err <= 1e-12


def test_quadrature_failure():
    with pytest.raises(QuadratureError):
        adaptive_quad(lambda x: 1 / x, 0.0, 1.0, 1e-10, max_panels=50)


# -- the quadrature routes --------------------------------------------------

def test_quadrature_u_examples():
    r = geodesic_quadrature_u("1", "u^2", 1.0, 2.0, 0.0)
    assert np.all(r.y == 0.0)
    r = geodesic_quadrature_u("1", "1", 0.0, 1.0, 1 / math.sqrt(2))
    assert r.y[-1] == pytest.approx(1.0, abs=1e-12)
    assert r.s[-1] == pytest.approx(math.sqrt(2), abs=1e-12)
    r = geodesic_quadrature_u("2", "u^2", 1.2, 3.0, 1.0)
    assert abs(r.y[-1] - cone_oracle(1.2, 3.0, 1.0)) < 1e-8
    assert r.y[0] == 0.0 and r.meta["kind"] == "quadrature-u"


def test_quadrature_v_sphere():
    for c1 in (0.3, 0.6, 0.9):
        v = np.linspace(math.pi / 4, math.pi / 2, 41)
        if c1 > math.sin(math.pi / 4):
            v = v[v > math.asin(c1) + 1e-3]
        r = geodesic_quadrature_v("sin(v)^2", "1", v[0], v[-1], c1, samples=v)
        want = sphere_closed_form(v, c1) - sphere_closed_form(v[0], c1)
        assert np.max(np.abs(r.y - want)) < 1e-8
    r = geodesic_quadrature_v("sin(v)^2", "1", 0.5, 2.5, 0.0)
    assert np.all(r.y == 0.0)


def test_turning_point_start_reaches_equator_limit():
    # c1 -> 1: starting on the turning latitude, the equator is reached after a quarter turn
    for c1 in (0.9, 0.99, 0.999):
        r = geodesic_quadrature_v("sin(v)^2", "1", math.asin(c1), math.pi / 2, c1)
        assert r.turning[0]
        assert r.y[-1] == pytest.approx(math.pi / 2, abs=1e-9)
    with pytest.raises(DomainError):
        geodesic_quadrature_v("sin(v)^2", "1", math.pi / 2 - 0.1, math.pi / 2, 1.0)


def test_revolution_examples():
    a, c1 = 2.0, 0.7
    r = geodesic_revolution(str(a), 0.0, 3.0, c1)
    slope = c1 / (a * math.sqrt(a * a - c1 * c1))
    assert np.max(np.abs(r.y - slope * r.x)) < 1e-13
    r = geodesic_revolution("2 + cos(u)", 0.5, 2.5, 0.0)
    assert np.all(r.y == 0.0)
    r = geodesic_revolution("u", 1.5, 2.5, 1.0)
    assert abs(r.y[-1] - cone_oracle(1.5, 2.5, 1.0)) < 1e-8
    assert r.meta["profile"] == "u"


def test_revolution_turning_endpoint():
    # f(u1) = c1: integrable singularity at the start
    r = geodesic_revolution("u", 1.0, 2.5, 1.0, tol=1e-11)
    assert r.turning[0]
    assert abs(r.y[-1] - cone_oracle(1.0, 2.5, 1.0)) < 1e-9
    assert r.error <= 1e-11


def test_revolution_errors():
    with pytest.raises(DomainError):
        geodesic_revolution("u", 0.5, 2.0, 1.0)  # f < c1 inside
    with pytest.raises(DomainError):
        geodesic_revolution("u - 1", 0.5, 2.0, 0.1)  # profile not positive


def test_monotone_and_branches():
    r = geodesic_revolution("2 + cos(u)", 0.5, 2.5, 0.8)
    assert np.all(np.diff(r.y) >= 0)
    m = geodesic_revolution("2 + cos(u)", 0.5, 2.5, 0.8, branch=-1)
    assert np.allclose(m.y, -r.y, atol=1e-14)
    # integrating downward in u
    d = geodesic_revolution("2 + cos(u)", 2.5, 0.5, 0.8)
    assert d.y[-1] == pytest.approx(-r.y[-1], abs=1e-10)


@pytest.mark.parametrize("f, c1", [("u", 0.3), ("2 + cos(u)", 0.8), ("u^2", 0.5)])
def test_clairaut_along_quadrature(f, c1):
    r = geodesic_revolution(f, 0.9, 2.5, c1)
    q = r.clairaut()
    assert np.max(np.abs(q - c1)) < 1e-12
    du, dv = r.unit_velocity()
    assert np.allclose(r.E * du**2 + r.G * dv**2, 1.0, atol=1e-12)


def test_quadrature_curves_satisfy_geodesic_equations():
    for f, c1 in (("u", 0.3), ("2 + cos(u)", 0.8)):
        s = surf.revolution(f, (0.5, 2.5))
        r = geodesic_revolution(f, 0.5, 2.5, c1, samples=801)
        assert max(el_residual_geodesic(s, r.to_curve(s))) < 1e-5
    sphere = surf.sphere(1.0)
    r = geodesic_quadrature_v("sin(v)^2", "1", 0.8, 2.0, 0.5, samples=801)
    assert max(el_residual_geodesic(sphere, r.to_curve(sphere))) < 1e-5


def test_quadrature_agrees_with_ode():
    f, c1 = "2 + cos(u)", 0.8
    s = surf.revolution(f, (0.25, 3.0))
    r = geodesic_revolution(f, 0.5, 2.5, c1, samples=401)
    st = r.to_curve(s).start
    c = integrate_geodesic(s, GeodesicState(0.0, st.u, st.v, st.du, st.dv), r.length)
    y = c.at(r.s)
    assert np.max(np.abs(y[:, 0] - r.u)) < 1e-7
    assert np.max(np.abs(y[:, 1] - r.v)) < 1e-7
