"""Second-order truncated Taylor jets in two directions.

A :class:`Jet2` carries a value, its two first partials and its three
second partials.  Arithmetic propagates all six coefficients exactly, so a
single evaluation pass through an expression yields the Hessian as well as
the gradient.
"""
from __future__ import annotations

import math
from typing import NamedTuple


class JetDomainError(ArithmeticError):
    """Raised when a jet operation leaves the domain of its function."""


class Jet2(NamedTuple):
    val: float
    du: float = 0.0
    dv: float = 0.0
    duu: float = 0.0
    duv: float = 0.0
    dvv: float = 0.0

    @classmethod
    def constant(cls, c: float) -> "Jet2":
        return cls(float(c))

    @classmethod
    def seed(cls, value: float, direction: int) -> "Jet2":
        """Independent variable along direction 0 (``u``) or 1 (``v``)."""
        if direction == 0:
            return cls(float(value), 1.0, 0.0)
        if direction == 1:
            return cls(float(value), 0.0, 1.0)
        raise ValueError("direction must be 0 or 1")

    @property
    def d1(self) -> tuple[float, float]:
        return (self.du, self.dv)

    @property
    def d2(self) -> tuple[float, float, float]:
        return (self.duu, self.duv, self.dvv)

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other):
        o = _lift(other)
        return Jet2(self.val + o.val, self.du + o.du, self.dv + o.dv,
                    self.duu + o.duu, self.duv + o.duv, self.dvv + o.dvv)

    __radd__ = __add__

    def __sub__(self, other):
        o = _lift(other)
        return Jet2(self.val - o.val, self.du - o.du, self.dv - o.dv,
                    self.duu - o.duu, self.duv - o.duv, self.dvv - o.dvv)

    def __rsub__(self, other):
        return _lift(other) - self

    def __neg__(self):
        return Jet2(-self.val, -self.du, -self.dv, -self.duu, -self.duv, -self.dvv)

    def __pos__(self):
        return self

    def __mul__(self, other):
        o = _lift(other)
        a, b = self, o
        return Jet2(
            a.val * b.val,
            a.du * b.val + a.val * b.du,
            a.dv * b.val + a.val * b.dv,
            a.duu * b.val + 2.0 * a.du * b.du + a.val * b.duu,
            a.duv * b.val + a.du * b.dv + a.dv * b.du + a.val * b.duv,
            a.dvv * b.val + 2.0 * a.dv * b.dv + a.val * b.dvv,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        return _divide(self, _lift(other))

    def __rtruediv__(self, other):
        return _divide(_lift(other), self)

    def __pow__(self, other):
        if isinstance(other, Jet2):
            if other.du == other.dv == other.duu == other.duv == other.dvv == 0.0:
                return power(self, other.val)
            return exp(other * log(self))
        return power(self, other)

    def __rpow__(self, other):
        return exp(self * log(_lift(other)))


def _lift(x) -> Jet2:
    if isinstance(x, Jet2):
        return x
    return Jet2(float(x))


def chain(a: Jet2, f0: float, f1: float, f2: float) -> Jet2:
    """Compose a scalar function with value f0, slope f1, curvature f2 at ``a.val``."""
    return Jet2(
        f0,
        f1 * a.du,
        f1 * a.dv,
        f2 * a.du * a.du + f1 * a.duu,
        f2 * a.du * a.dv + f1 * a.duv,
        f2 * a.dv * a.dv + f1 * a.dvv,
    )


def reciprocal(a: Jet2) -> Jet2:
    if a.val == 0.0:
        raise JetDomainError("division by zero")
    r = 1.0 / a.val
    return chain(a, r, -r * r, 2.0 * r * r * r)


def _divide(a: Jet2, b: Jet2) -> Jet2:
    # the value is a.val / b.val itself, not a.val * (1 / b.val)
    return (a * reciprocal(b))._replace(val=a.val / b.val)


def ipow(x: float, k: int) -> float:
    """x**k for k >= 0 by repeated squaring, in the same order as :func:`power`."""
    result, base = 1.0, x
    while k:
        if k & 1:
            result = result * base
        k >>= 1
        if k:
            base = base * base
    return result


def sin(a: Jet2) -> Jet2:
    s, c = math.sin(a.val), math.cos(a.val)
    return chain(a, s, c, -s)


def cos(a: Jet2) -> Jet2:
    s, c = math.sin(a.val), math.cos(a.val)
    return chain(a, c, -s, -c)


def tan(a: Jet2) -> Jet2:
    c = math.cos(a.val)
    if c == 0.0:
        raise JetDomainError("tan at a pole")
    t = math.tan(a.val)
    sec2 = 1.0 + t * t
    return chain(a, t, sec2, 2.0 * t * sec2)


def sinh(a: Jet2) -> Jet2:
    s, c = math.sinh(a.val), math.cosh(a.val)
    return chain(a, s, c, s)


def cosh(a: Jet2) -> Jet2:
    s, c = math.sinh(a.val), math.cosh(a.val)
    return chain(a, c, s, c)


def tanh(a: Jet2) -> Jet2:
    t = math.tanh(a.val)
    sech2 = 1.0 - t * t
    return chain(a, t, sech2, -2.0 * t * sech2)


def exp(a: Jet2) -> Jet2:
    e = math.exp(a.val)
    return chain(a, e, e, e)


def log(a: Jet2) -> Jet2:
    if a.val <= 0.0:
        raise JetDomainError("log of non-positive value")
    r = 1.0 / a.val
    return chain(a, math.log(a.val), r, -r * r)


def sqrt(a: Jet2) -> Jet2:
    if a.val < 0.0:
        raise JetDomainError("sqrt of negative value")
    if a.val == 0.0:
        raise JetDomainError("sqrt is not differentiable at 0")
    s = math.sqrt(a.val)
    return chain(a, s, 0.5 / s, -0.25 / (s * a.val))


def absolute(a: Jet2) -> Jet2:
    if a.val == 0.0:
        if any(a[1:]):
            raise JetDomainError("abs is not differentiable at 0")
        return Jet2(0.0)
    sgn = 1.0 if a.val > 0.0 else -1.0
    return chain(a, abs(a.val), sgn, 0.0)


def power(a: Jet2, n: float) -> Jet2:
    """``a ** n`` for a constant exponent.

    Integral exponents use repeated squaring so polynomial jets are exact;
    any other exponent requires a positive base.
    """
    if float(n).is_integer() and abs(n) <= 1 << 20:
        k = int(n)
        if k < 0:
            return reciprocal(power(a, -k))
        result = Jet2(1.0)
        base = a
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result
    if a.val <= 0.0:
        raise JetDomainError("non-integer power of non-positive base")
    p = a.val ** n
    return chain(a, p, n * p / a.val, n * (n - 1.0) * p / (a.val * a.val))


FUNCTIONS = {
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "sinh": sinh,
    "cosh": cosh,
    "tanh": tanh,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "abs": absolute,
    "neg": lambda a: -a,
}
