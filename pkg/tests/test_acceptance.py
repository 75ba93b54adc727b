"""The ten acceptance criteria, each at its stated tolerance.

Every test prints a single ``criterion N PASS|FAIL`` line (also gathered in
the pytest terminal summary).  The checks themselves live in
:mod:`artifact.verify`, shared with ``geodesic verify``.  Run this file
directly to print the lines without pytest.
"""
import functools
import time

import pytest

from artifact import verify

TITLES = {
    1: "great-circle reproduction",
    2: "helix reproduction",
    3: "quadrature vs closed form on the sphere",
    4: "surface-of-revolution quadrature vs ODE",
    5: "Clairaut first integral",
    6: "direct method convergence",
    7: "jet derivatives vs finite differences",
    8: "unit-speed conservation",
    9: "discrete norm axioms",
    10: "localization of the discrete functional",
}


@functools.lru_cache(maxsize=None)
def _revolution():
    return tuple(verify.revolution_suite())


def _checks(k):
    if k == 1:
        return verify.great_circle_suite(pairs=100)
    if k == 2:
        return verify.helix_suite(states=20)
    if k == 3:
        return verify.sphere_quadrature_suite(c1s=(0.3, 0.6, 0.9), points=50)
    if k == 4:
        return [c for c in _revolution() if "Clairaut" not in c.name]
    if k == 5:
        return [c for c in _revolution() if "Clairaut" in c.name]
    if k == 6:
        return verify.direct_suite(ns=(15, 31, 63, 127))
    if k == 7:
        return verify.ad_suite(points=200)
    if k == 8:
        return verify.speed_suite()
    if k == 9:
        return verify.norms_suite()
    return verify.localization_suite(curves=50)


def evaluate(k):
    t0 = time.perf_counter()
    checks = _checks(k)
    ok = bool(checks) and all(c.passed for c in checks)
    failed = [c for c in checks if not c.passed]
    shown = failed[0] if failed else max(checks, key=lambda c: c.margin)
    bound = "limit" if shown.cmp == "<" else "at least"
    line = (f"criterion {k:2d} {'PASS' if ok else 'FAIL'}: {TITLES[k]} "
            f"({len(checks) - len(failed)}/{len(checks)} checks; "
            f"{'first failure' if failed else 'tightest'}: {shown.name} = {shown.value:.3g}, "
            f"{bound} {shown.limit:.3g}; {time.perf_counter() - t0:.1f} s)")
    return ok, line, checks


@pytest.mark.parametrize("k", sorted(TITLES))
def test_criterion(k, acceptance_line):
    ok, line, checks = evaluate(k)
    acceptance_line(line)
    assert ok, "\n".join(c.line() for c in checks if not c.passed)


if __name__ == "__main__":
    for k in sorted(TITLES):
        print(evaluate(k)[1])
