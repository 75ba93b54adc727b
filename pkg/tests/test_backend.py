import math
import os
import subprocess
import sys

import numpy as np
import pytest

from artifact import _backend
from artifact import surface as surf
from artifact.surface import fundamental_form, make_kernel, parse_surface
from artifact.verify import builtin_surfaces

BACKENDS = _backend.available_backends()
needs_compiled = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernel not built")

SURFACES = builtin_surfaces() + [
    parse_surface("name = saddle\nx = u\ny = v\nz = u^2*v - v^3/3 + sinh(u*v)/(2 + cos(u))\n"
                  "u in [-1, 1]\nv in [-1, 1]\n"),
    parse_surface("name = torus\nx = (2 + cos(v))*cos(u)\ny = (2 + cos(v))*sin(u)\nz = sin(v)\n"
                  "u in [0, 2*pi] periodic\nv in [0, 2*pi] periodic\n"),
    parse_surface("name = misc\nx = sqrt(1 + u*u)*tanh(v)\ny = exp(-u)*tan(v/2)\n"
                  "z = abs(u - 3)^1.5 + log(2 + u)*v^-2\nu in [-1, 1]\nv in [0.5, 1.5]\n"),
]


def test_python_backend_always_available():
    assert "python" in BACKENDS
    assert _backend.BACKEND in BACKENDS


@pytest.mark.parametrize("s", SURFACES, ids=lambda s: s.name)
@pytest.mark.parametrize("name", list(BACKENDS))
def test_kernel_matches_jet_evaluation(s, name):
    k = make_kernel(s, name)
    rng = np.random.default_rng(7)
    for u, v in zip(rng.uniform(s.u_range.lo, s.u_range.hi, 40),
                    rng.uniform(s.v_range.lo, s.v_range.hi, 40)):
        ref = fundamental_form(s, u, v)
        got = k.form(u, v)
        want = (ref.E, ref.F, ref.G, ref.E_u, ref.E_v, ref.F_u, ref.F_v, ref.G_u, ref.G_v)
        scale = max(1.0, max(abs(x) for x in want))
        assert max(abs(a - b) for a, b in zip(got, want)) <= 1e-13 * scale
        p = k.point(u, v)
        assert p == pytest.approx((s.x(u, v), s.y(u, v), s.z(u, v)), rel=1e-14, abs=1e-14)


@needs_compiled
@pytest.mark.parametrize("s", SURFACES, ids=lambda s: s.name)
def test_backends_integrate_alike(s):
    py, cy = make_kernel(s, "python"), make_kernel(s, "cython")
    u0 = 0.5 * (s.u_range.lo + s.u_range.hi) + 0.1
    v0 = 0.5 * (s.v_range.lo + s.v_range.hi) + 0.05
    y0 = (u0, v0, 0.3, 0.2, 0.0)
    a = py.integrate(y0, 0.8, 1e-9, 1e-12, 0.05, 0.0, 10**6)
    b = cy.integrate(y0, 0.8, 1e-9, 1e-12, 0.05, 0.0, 10**6)
    assert a[0] == b[0]
    assert len(a[4]) == len(b[4])
    assert np.max(np.abs(np.asarray(a[5]) - np.asarray(b[5]))) < 1e-12


@needs_compiled
def test_backends_fail_alike():
    s = parse_surface("x = u\ny = v\nz = log(u)\nu in [-1, 1]\nv in [0, 1]\n")
    errors = []
    for name in ("python", "cython"):
        with pytest.raises(_backend.KERNEL_ERRORS) as err:
            make_kernel(s, name).form(-0.5, 0.5)
        errors.append((err.value.status, err.value.tape, err.value.index, err.value.message))
    assert errors[0] == errors[1]
    # singular metric and domain exit
    sph = surf.sphere(1.0)
    out = [make_kernel(sph, name).integrate((0.0, 1.0, 0.0, -1.0, 0.0), 2.0, 1e-9, 1e-12, 0.05,
                                            0.0, 10**6)[0] for name in ("python", "cython")]
    assert out[0] == out[1] != 0
    cone = surf.revolution("u", (1.0, 2.0))
    out = [make_kernel(cone, name).integrate((1.5, 0.0, 1.0, 0.0, 0.0), 5.0, 1e-9, 1e-12, 0.05,
                                             0.0, 10**6)[0] for name in ("python", "cython")]
    assert out[0] == out[1] == 3


@pytest.mark.parametrize("flag, want", [("1", "python"), ("0", None)])
def test_environment_selects_backend(flag, want):
    env = dict(os.environ, ARTIFACT_PURE_PYTHON=flag)
    out = subprocess.run([sys.executable, "-c", "import artifact; print(artifact.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True).stdout.strip()
    expected = want or ("cython" if "cython" in BACKENDS else "python")
    assert out == expected


def test_python_kernel_tracks_wrapping():
    k = make_kernel(surf.sphere(1.0), "python")
    assert k.point(0.5 + 6 * math.pi, 1.0) == pytest.approx(k.point(0.5, 1.0), abs=1e-13)
