"""Compare the compiled kernel with the pure-Python fallback.

    python3 benchmarks/bench_backends.py [--repeat 5] [--json out.json]

Each case runs on every available backend; the table reports the best of
``--repeat`` timings and the speedup of the compiled kernel.  The cases
check both backends produce the same numbers before timing them.
"""
from __future__ import annotations

import argparse
import json
import math
import platform
import timeit

import numpy as np

from artifact import _backend, surface as surf
from artifact.geodesic import GeodesicState, connect_geodesic, integrate_geodesic, launch_direction
from artifact.surface import make_kernel, parse_surface

TORUS = parse_surface("name = torus\nx = (2 + cos(v))*cos(u)\ny = (2 + cos(v))*sin(u)\n"
                      "z = sin(v)\nu in [0, 2*pi] periodic\nv in [0, 2*pi] periodic\n")


def with_backend(spec, name):
    """A copy of ``spec`` whose cached kernel is the named backend."""
    s = surf.SurfaceSpec(spec.name, spec.x, spec.y, spec.z, spec.u_range, spec.v_range, spec.eps_reg)
    s.__dict__["kernel"] = make_kernel(s, name)
    return s


def case_form(name):
    k = make_kernel(TORUS, name)
    pts = np.random.default_rng(0).uniform(0, 2 * math.pi, size=(5000, 2)).tolist()

    def run():
        return [k.form(u, v) for u, v in pts]
    return run, lambda out: out[123]


def case_integrate(name):
    s = with_backend(TORUS, name)
    du, dv = launch_direction(s, 0.3, 0.4, 0.7)

    def run():
        return integrate_geodesic(s, GeodesicState(0.0, 0.3, 0.4, du, dv), 60.0, 1e-10)
    return run, lambda c: (len(c), float(c.u[-1]), float(c.v[-1]))


def case_connect(name):
    s = with_backend(surf.sphere(1.0), name)

    def run():
        return connect_geodesic(s, (0.2, 0.7), (2.4, 2.1))
    return run, lambda c: c.length


CASES = {
    "form x5000 (torus)": case_form,
    "integrate L=60 tol=1e-10 (torus)": case_integrate,
    "connect, 32 seeds (sphere)": case_connect,
}


def _same(a, b) -> bool:
    a, b = np.atleast_1d(np.asarray(a, dtype=float)), np.atleast_1d(np.asarray(b, dtype=float))
    return a.shape == b.shape and bool(np.allclose(a, b, rtol=1e-10, atol=1e-12))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", dest="json_path", help="write the timings here")
    args = ap.parse_args(argv)

    backends = list(_backend.available_backends())
    rows = []
    for label, make in CASES.items():
        times, keys = {}, {}
        for name in backends:
            run, key = make(name)
            keys[name] = key(run())  # warm up and record the answer
            times[name] = min(timeit.repeat(run, number=1, repeat=args.repeat))
        if len(backends) > 1 and not _same(keys["python"], keys["cython"]):
            raise SystemExit(f"{label}: backends disagree: {keys}")
        rows.append({"case": label, **{f"{n}_s": t for n, t in times.items()}})

    width = max(len(r["case"]) for r in rows)
    head = f"{'case':<{width}}  " + "  ".join(f"{n:>10}" for n in backends)
    if "cython" in backends:
        head += f"  {'speedup':>8}"
    print(f"python {platform.python_version()}, default backend {_backend.BACKEND}")
    print(head)
    for r in rows:
        line = f"{r['case']:<{width}}  " + "  ".join(f"{r[n + '_s'] * 1e3:8.2f}ms" for n in backends)
        if "cython" in backends:
            r["speedup"] = r["python_s"] / r["cython_s"]
            line += f"  {r['speedup']:7.1f}x"
        print(line)
    if "cython" not in backends:
        print("compiled kernel not built; only the fallback was timed")
    if args.json_path:
        with open(args.json_path, "w", encoding="utf-8") as fh:
            json.dump({"backends": backends, "rows": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
