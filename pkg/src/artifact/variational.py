"""Discrete functionals J[y] = sum F(x_i, y_i, (y_i - y_{i-1})/h) h and the direct method.

Lagrangians are expressions over ``x``, ``y`` and ``p`` (``p`` standing for
y').  Curves live on uniform grids x_0 = a, ..., x_{n+1} = b.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded

from .errors import ConvergenceError, DomainError
from .expr import Expr, ExprDomainError, as_expr, eval_jet, evaluate
from .jet import Jet2

XYP = ("x", "y", "p")


@dataclass(frozen=True)
class FunctionalSpec:
    integrand: Expr
    a: float
    b: float
    A: float
    B: float

    def __post_init__(self):
        object.__setattr__(self, "integrand", as_expr(self.integrand, XYP))
        if not self.a < self.b:
            raise DomainError(f"need a < b, got [{self.a}, {self.b}]")

    def restrict(self, curve: "DiscreteCurve") -> "FunctionalSpec":
        """Same integrand with interval and boundary values taken from ``curve``."""
        return FunctionalSpec(self.integrand, curve.a, curve.b,
                              float(curve.y[0]), float(curve.y[-1]))


@dataclass(frozen=True)
class DiscreteCurve:
    """Values y_0..y_{n+1} on the uniform grid over [a, b]."""

    a: float
    b: float
    y: np.ndarray = field(repr=False)

    def __post_init__(self):
        y = np.array(self.y, dtype=float)
        y.setflags(write=False)
        object.__setattr__(self, "y", y)
        if len(y) < 2:
            raise DomainError("a discrete curve needs at least its two endpoints")
        if not self.a < self.b:
            raise DomainError(f"need a < b, got [{self.a}, {self.b}]")

    @property
    def n(self) -> int:
        return len(self.y) - 2

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n + 1)

    @property
    def x(self) -> np.ndarray:
        return self.a + self.h * np.arange(self.n + 2)

    @classmethod
    def from_function(cls, fn, a: float, b: float, n: int) -> "DiscreteCurve":
        h = (b - a) / (n + 1)
        x = a + h * np.arange(n + 2)
        return cls(a, b, np.array([fn(t) for t in x], dtype=float))

    @classmethod
    def linear(cls, a, b, A, B, n) -> "DiscreteCurve":
        return cls(a, b, A + (B - A) * np.arange(n + 2) / (n + 1))

    def split(self, k: int) -> tuple["DiscreteCurve", "DiscreteCurve"]:
        """Cut at grid node ``k`` (1 <= k <= n); both pieces keep the step h."""
        if not 1 <= k <= self.n:
            raise DomainError(f"split node must be interior, got {k}")
        xk = self.a + k * self.h
        return (DiscreteCurve(self.a, xk, self.y[:k + 1]),
                DiscreteCurve(xk, self.b, self.y[k:]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y"])
        for xi, yi in zip(self.x, self.y):
            w.writerow([f"{xi:.17g}", f"{yi:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "DiscreteCurve":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows or set(rows[0]) != {"x", "y"}:
            raise DomainError("expected CSV header 'x,y'")
        x = np.array([float(r["x"]) for r in rows])
        y = np.array([float(r["y"]) for r in rows])
        curve = cls(float(x[0]), float(x[-1]), y)
        if not np.allclose(curve.x, x, rtol=0, atol=1e-12 * max(1.0, abs(x).max())):
            raise DomainError("CSV grid is not uniform")
        return curve


def _check_endpoints(f: FunctionalSpec, c: DiscreteCurve):
    tol = 1e-12 * max(1.0, abs(f.a), abs(f.b))
    if abs(c.a - f.a) > tol or abs(c.b - f.b) > tol:
        raise DomainError("curve interval differs from the functional's")
    for got, want, label in ((c.y[0], f.A, "y(a)"), (c.y[-1], f.B, "y(b)")):
        if abs(got - want) > 1e-12 * max(1.0, abs(want)):
            raise DomainError(f"{label}={got} does not match the boundary value {want}")


def _slopes(c: DiscreteCurve) -> np.ndarray:
    return np.diff(c.y) / c.h


def functional_eval(f: FunctionalSpec, c: DiscreteCurve) -> float:
    """The polygonal sum with backward difference quotients, i = 1..n+1."""
    _check_endpoints(f, c)
    x, y, p = c.x, c.y, _slopes(c)
    total = 0.0
    for i in range(1, c.n + 2):
        try:
            total += evaluate(f.integrand, {"x": x[i], "y": y[i], "p": p[i - 1]})
        except ExprDomainError as exc:
            raise ExprDomainError(f"at node {i}: {exc}") from None
    return total * c.h


def _jets(f: FunctionalSpec, x, y, p, offset=1):
    """F, F_y, F_p, F_yy, F_yp, F_pp at each (x, y, p) triple."""
    out = np.empty((len(x), 6))
    for i, (xi, yi, pi) in enumerate(zip(x, y, p)):
        try:
            j = eval_jet(f.integrand, {"x": Jet2(xi), "y": Jet2.seed(yi, 0), "p": Jet2.seed(pi, 1)})
        except ExprDomainError as exc:
            raise ExprDomainError(f"at node {i + offset}: {exc}") from None
        out[i] = j
    return out.T


def _gradient_hessian(f: FunctionalSpec, x, y, h):
    """Gradient and tridiagonal Hessian of the discrete sum in the interior values."""
    p = np.diff(y) / h
    F, Fy, Fp, Fyy, Fyp, Fpp = _jets(f, x[1:], y[1:], p)
    # element i (1..n+1) sits at index i-1; interior unknown j (1..n) at index j-1
    grad = h * Fy[:-1] + Fp[:-1] - Fp[1:]
    diag = h * Fyy[:-1] + 2 * Fyp[:-1] + Fpp[:-1] / h + Fpp[1:] / h
    # coupling of y_j with y_{j-1} lives in element j (j = 2..n)
    off = -Fyp[1:-1] - Fpp[1:-1] / h
    return float(np.sum(F) * h), grad, diag, off


@dataclass
class MinimizeInfo:
    iterations: int
    gradient_norm: float
    value: float
    newton_steps: int
    gradient_steps: int
    history: list = field(default_factory=list)


def direct_minimize(f: FunctionalSpec, n: int, tol: float = 1e-10, max_iter: int = 500,
                    initial: DiscreteCurve | None = None, return_info: bool = False):
    """Minimize the discrete functional over y_1..y_n with the endpoints pinned.

    Damped Newton on the tridiagonal Hessian with backtracking; steepest
    descent when the Hessian is not positive definite.  Starts from the
    linear interpolant of the boundary values unless ``initial`` is given.
    Raises :class:`ConvergenceError` (``best`` = last iterate) when the
    gradient max-norm does not drop below ``tol`` within ``max_iter``.
    """
    if n < 1:
        raise DomainError("need at least one interior node")
    c = initial if initial is not None else DiscreteCurve.linear(f.a, f.b, f.A, f.B, n)
    _check_endpoints(f, c)
    x, y, h = c.x, np.array(c.y), c.h
    info = MinimizeInfo(0, math.inf, math.nan, 0, 0)

    def value(yy):
        p = np.diff(yy) / h
        return float(sum(evaluate(f.integrand, {"x": a, "y": b, "p": q})
                         for a, b, q in zip(x[1:], yy[1:], p)) * h)

    for it in range(max_iter + 1):
        J, grad, diag, off = _gradient_hessian(f, x, y, h)
        gnorm = float(np.max(np.abs(grad)))
        info.iterations, info.gradient_norm, info.value = it, gnorm, J
        info.history.append(gnorm)
        if gnorm < tol:
            break
        if it == max_iter:
            best = DiscreteCurve(f.a, f.b, y)
            raise ConvergenceError(f"direct method stalled at |grad|={gnorm:.3e}", best,
                                   {"iterations": it, "gradient_norm": gnorm})
        ab = np.zeros((2, n))
        ab[0, 1:] = off
        ab[1] = diag
        try:
            chol = cholesky_banded(ab, lower=False)
            step = -cho_solve_banded((chol, False), grad)
            info.newton_steps += 1
        except LinAlgError:
            step = -grad / max(np.max(np.abs(diag)), 1.0)
            info.gradient_steps += 1
        slope = float(grad @ step)
        lam = 1.0
        while True:
            trial = y.copy()
            trial[1:-1] += lam * step
            try:
                Jt = value(trial)
            except ExprDomainError:
                Jt = math.inf
            if Jt <= J + 1e-4 * lam * slope or lam < 1e-12:
                break
            lam *= 0.5
        if lam < 1e-12 and not Jt < J:
            # no descent left at machine precision: accept if the full step stays finite
            trial = y.copy()
            trial[1:-1] += step
        y = trial
    out = DiscreteCurve(f.a, f.b, y)
    return (out, info) if return_info else out


def el_residual_1d(f: FunctionalSpec, c: DiscreteCurve) -> np.ndarray:
    """F_y - d/dx F_p at the interior nodes x_1..x_n.

    F_y is taken at the node with the central slope; d/dx F_p is the central
    difference of F_p evaluated at the half nodes, where the backward
    quotient is a second-order slope.  Both pieces are O(h^2).
    """
    if c.n < 3:
        raise DomainError("residual needs at least 3 interior nodes")
    x, y, h = c.x, c.y, c.h
    pc = (y[2:] - y[:-2]) / (2 * h)
    _, Fy, _, _, _, _ = _jets(f, x[1:-1], y[1:-1], pc)
    xm, ym, pm = 0.5 * (x[1:] + x[:-1]), 0.5 * (y[1:] + y[:-1]), np.diff(y) / h
    _, _, Fp, _, _, _ = _jets(f, xm, ym, pm)
    return Fy - np.diff(Fp) / h


# -- discrete norms ---------------------------------------------------------

def _difference(y: DiscreteCurve, z: DiscreteCurve | None) -> tuple[np.ndarray, float]:
    if z is None:
        return np.asarray(y.y), y.h
    if len(y.y) != len(z.y) or abs(y.a - z.a) > 1e-15 * max(1, abs(y.a)) \
            or abs(y.b - z.b) > 1e-15 * max(1, abs(y.b)):
        raise DomainError("curves are on different grids")
    return y.y - z.y, y.h


def norm_c0(y: DiscreteCurve, z: DiscreteCurve | None = None) -> float:
    """max |y - z| over the grid."""
    d, _ = _difference(y, z)
    return float(np.max(np.abs(d)))


def norm_dn(y: DiscreteCurve, z: DiscreteCurve | None = None, k: int = 1) -> float:
    """Sum over orders 0..k of the max-abs finite-difference derivative of y - z."""
    d, h = _difference(y, z)
    if k < 0:
        raise DomainError("order must be non-negative")
    if len(d) < max(k + 2, 3 if k else 1):
        raise DomainError(f"grid too coarse for order {k}")
    total = float(np.max(np.abs(d)))
    g = d
    for _ in range(k):
        g = np.gradient(g, h, edge_order=2)
        total += float(np.max(np.abs(g)))
    return total


def norm_d1(y: DiscreteCurve, z: DiscreteCurve | None = None) -> float:
    return norm_dn(y, z, 1)
