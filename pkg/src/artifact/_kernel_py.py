"""Pure-Python surface kernel.

Mirrors the compiled ``_kernel`` extension.  The three coordinate tapes are
turned into straight-line Python source once per surface; components that
are structurally zero are folded away at generation time, so evaluating the
embedded point (no derivatives) costs far less than the full form.
"""
from __future__ import annotations

import math

import numpy as np

from .expr import (OP_ADD, OP_CONST, OP_DIV, OP_MUL, OP_NEG, OP_POW, OP_POWI,
                   OP_POWR, OP_SUB, OP_VAR, UNARY_OPCODES)

BACKEND = "python"

STATUS_OK = 0
STATUS_EXPR = 1
STATUS_SINGULAR = 2
STATUS_DOMAIN_EXIT = 3
STATUS_UNDERFLOW = 4
STATUS_MAX_STEPS = 5


class KernelError(ArithmeticError):
    def __init__(self, status, tape=-1, index=-1, message=""):
        super().__init__(message or f"kernel status {status}")
        self.status = status
        self.tape = tape
        self.index = index
        self.message = message


_Z, _ONE = "0.0", "1.0"
_OPNAME = {v: k for k, v in UNARY_OPCODES.items()}


def _is_simple(s):
    return s.replace("_", "").replace(".", "").replace("-", "").isalnum()


class _Gen:
    def __init__(self):
        self.lines = []
        self.n = 0

    def tmp(self, text):
        if _is_simple(text):
            return text
        name = f"t{self.n}"
        self.n += 1
        self.lines.append(f"    {name} = {text}")
        return name

    @staticmethod
    def add(*terms):
        terms = [t for t in terms if t != _Z]
        if not terms:
            return _Z
        return terms[0] if len(terms) == 1 else "(" + " + ".join(terms) + ")"

    @staticmethod
    def neg(a):
        return _Z if a == _Z else f"(-{a})"

    @staticmethod
    def mul(*factors):
        if _Z in factors:
            return _Z
        factors = [f for f in factors if f != _ONE]
        if not factors:
            return _ONE
        return factors[0] if len(factors) == 1 else "(" + " * ".join(factors) + ")"

    def jet(self, comps):
        return tuple(self.tmp(c) for c in comps)

    def jmul(self, a, b):
        m = self.mul
        return self.jet((
            m(a[0], b[0]),
            self.add(m(a[1], b[0]), m(a[0], b[1])),
            self.add(m(a[2], b[0]), m(a[0], b[2])),
            self.add(m(a[3], b[0]), m("2.0", a[1], b[1]), m(a[0], b[3])),
            self.add(m(a[4], b[0]), m(a[1], b[2]), m(a[2], b[1]), m(a[0], b[4])),
            self.add(m(a[5], b[0]), m("2.0", a[2], b[2]), m(a[0], b[5])),
        ))

    def chain(self, a, f0, f1, f2):
        m = self.mul
        if all(c == _Z for c in a[1:]):
            return (self.tmp(f0), _Z, _Z, _Z, _Z, _Z)
        f1 = self.tmp(f1)
        f2 = self.tmp(f2)
        return self.jet((
            f0,
            m(f1, a[1]),
            m(f1, a[2]),
            self.add(m(f2, a[1], a[1]), m(f1, a[3])),
            self.add(m(f2, a[1], a[2]), m(f1, a[4])),
            self.add(m(f2, a[2], a[2]), m(f1, a[5])),
        ))

    def check(self, cond, tape, k, msg):
        self.lines.append(f"    if {cond}: raise KernelError(1, {tape}, {k}, {msg!r})")

    def recip(self, b, tape, k):
        self.check(f"{b[0]} == 0.0", tape, k, "division by zero")
        r = self.tmp(f"(1.0 / {b[0]})")
        return self.chain(b, r, f"(-{r} * {r})", f"(2.0 * {r} * {r} * {r})")

    def unary(self, op, a, tape, k):
        x = a[0]
        if op == "sin":
            s, c = self.tmp(f"_sin({x})"), self.tmp(f"_cos({x})")
            return self.chain(a, s, c, f"(-{s})")
        if op == "cos":
            s, c = self.tmp(f"_sin({x})"), self.tmp(f"_cos({x})")
            return self.chain(a, c, f"(-{s})", f"(-{c})")
        if op == "tan":
            self.check(f"_cos({x}) == 0.0", tape, k, "tan at a pole")
            t = self.tmp(f"_tan({x})")
            s2 = self.tmp(f"(1.0 + {t} * {t})")
            return self.chain(a, t, s2, f"(2.0 * {t} * {s2})")
        if op == "sinh":
            s, c = self.tmp(f"_sinh({x})"), self.tmp(f"_cosh({x})")
            return self.chain(a, s, c, s)
        if op == "cosh":
            s, c = self.tmp(f"_sinh({x})"), self.tmp(f"_cosh({x})")
            return self.chain(a, c, s, c)
        if op == "tanh":
            t = self.tmp(f"_tanh({x})")
            s2 = self.tmp(f"(1.0 - {t} * {t})")
            return self.chain(a, t, s2, f"(-2.0 * {t} * {s2})")
        if op == "exp":
            e = self.tmp(f"_exp({x})")
            return self.chain(a, e, e, e)
        if op == "log":
            self.check(f"{x} <= 0.0", tape, k, "log of non-positive value")
            r = self.tmp(f"(1.0 / {x})")
            return self.chain(a, f"_log({x})", r, f"(-{r} * {r})")
        if op == "sqrt":
            self.check(f"{x} < 0.0", tape, k, "sqrt of negative value")
            if all(c == _Z for c in a[1:]):
                return (self.tmp(f"_sqrt({x})"), _Z, _Z, _Z, _Z, _Z)
            self.check(f"{x} == 0.0", tape, k, "sqrt is not differentiable at 0")
            s = self.tmp(f"_sqrt({x})")
            return self.chain(a, s, f"(0.5 / {s})", f"(-0.25 / ({s} * {x}))")
        if op == "abs":
            if all(c == _Z for c in a[1:]):
                return (self.tmp(f"abs({x})"), _Z, _Z, _Z, _Z, _Z)
            self.check(f"{x} == 0.0", tape, k, "abs is not differentiable at 0")
            sg = self.tmp(f"(1.0 if {x} > 0.0 else -1.0)")
            return self.chain(a, f"abs({x})", sg, _Z)
        raise ValueError(op)

    def powi(self, a, n, tape, k):
        if n == 0:
            return (_ONE, _Z, _Z, _Z, _Z, _Z)
        m = abs(n)
        result = None
        base = a
        while m:
            if m & 1:
                result = base if result is None else self.jmul(result, base)
            m >>= 1
            if m:
                base = self.jmul(base, base)
        if n < 0:
            result = self.recip(result, tape, k)
        return result

    def tape(self, tape, tid, seeds):
        slots = []
        for k, (op, a, b, c) in enumerate(tape.code):
            if op == OP_CONST:
                j = (repr(c), _Z, _Z, _Z, _Z, _Z)
            elif op == OP_VAR:
                j = seeds[a]
            elif op == OP_ADD:
                j = self.jet(self.add(x, y) for x, y in zip(slots[a], slots[b]))
            elif op == OP_SUB:
                j = self.jet(self.add(x, self.neg(y)) for x, y in zip(slots[a], slots[b]))
            elif op == OP_NEG:
                j = self.jet(self.neg(x) for x in slots[a])
            elif op == OP_MUL:
                j = self.jmul(slots[a], slots[b])
            elif op == OP_DIV:
                j = self.jmul(slots[a], self.recip(slots[b], tid, k))
            elif op == OP_POWI:
                j = self.powi(slots[a], int(c), tid, k)
            elif op == OP_POWR:
                x = slots[a][0]
                self.check(f"{x} <= 0.0", tid, k, "non-integer power of non-positive base")
                p = self.tmp(f"({x} ** {c!r})")
                j = self.chain(slots[a], p, f"({c!r} * {p} / {x})",
                               f"({c * (c - 1.0)!r} * {p} / ({x} * {x}))")
            elif op == OP_POW:
                x = slots[a][0]
                self.check(f"{x} <= 0.0", tid, k, "non-integer power of non-positive base")
                lg = self.unary("log", slots[a], tid, k)
                j = self.unary("exp", self.jmul(slots[b], lg), tid, k)
            else:
                j = self.unary(_OPNAME[op], slots[a], tid, k)
            slots.append(j)
        return slots[-1]


_NAMESPACE = {
    "_sin": math.sin, "_cos": math.cos, "_tan": math.tan, "_sinh": math.sinh,
    "_cosh": math.cosh, "_tanh": math.tanh, "_exp": math.exp, "_log": math.log,
    "_sqrt": math.sqrt,
}


def _wrap_lines(lo, period, name):
    if period > 0.0:
        return [f"    {name} = {lo!r} + ({name} - {lo!r}) % {period!r}"]
    return []


def _build(tapes, wrap, with_derivs):
    g = _Gen()
    g.lines.extend(wrap)
    if with_derivs:
        seeds = (("u", _ONE, _Z, _Z, _Z, _Z), ("v", _Z, _ONE, _Z, _Z, _Z))
    else:
        seeds = (("u", _Z, _Z, _Z, _Z, _Z), ("v", _Z, _Z, _Z, _Z, _Z))
    jets = [g.tape(t, i, seeds) for i, t in enumerate(tapes)]
    if with_derivs:
        # first partials of r and their u/v partials
        xu, yu, zu = (j[1] for j in jets)
        xv, yv, zv = (j[2] for j in jets)
        xuu, yuu, zuu = (j[3] for j in jets)
        xuv, yuv, zuv = (j[4] for j in jets)
        xvv, yvv, zvv = (j[5] for j in jets)
        dot = lambda p, q: g.add(*(g.mul(a, b) for a, b in zip(p, q)))
        ru, rv = (xu, yu, zu), (xv, yv, zv)
        ruu, ruv, rvv = (xuu, yuu, zuu), (xuv, yuv, zuv), (xvv, yvv, zvv)
        out = [
            dot(ru, ru), dot(ru, rv), dot(rv, rv),
            g.mul("2.0", dot(ru, ruu)), g.mul("2.0", dot(ru, ruv)),
            g.add(dot(ruu, rv), dot(ru, ruv)), g.add(dot(ruv, rv), dot(ru, rvv)),
            g.mul("2.0", dot(rv, ruv)), g.mul("2.0", dot(rv, rvv)),
        ]
        name = "_form"
    else:
        out = [j[0] for j in jets]
        name = "_point"
    src = f"def {name}(u, v):\n" + "\n".join(g.lines) + \
        ("\n" if g.lines else "") + f"    return ({', '.join(out)},)\n"
    ns = dict(_NAMESPACE, KernelError=KernelError)
    exec(compile(src, f"<surface {name}>", "exec"), ns)
    return ns[name], src


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


class SurfaceKernel:
    """Metric evaluation, geodesic right-hand side and DOPRI5 integration for one surface."""

    backend = BACKEND

    def __init__(self, tx, ty, tz, u_lo, u_hi, u_period, v_lo, v_hi, v_period, eps_reg):
        self.u_lo, self.u_hi, self.u_period = float(u_lo), float(u_hi), float(u_period)
        self.v_lo, self.v_hi, self.v_period = float(v_lo), float(v_hi), float(v_period)
        self.eps_reg = float(eps_reg)
        wrap = _wrap_lines(self.u_lo, self.u_period, "u") + _wrap_lines(self.v_lo, self.v_period, "v")
        self._form, self.form_source = _build((tx, ty, tz), wrap, True)
        self._point, self.point_source = _build((tx, ty, tz), wrap, False)

    def point(self, u, v):
        return self._point(float(u), float(v))

    def form(self, u, v):
        return self._form(float(u), float(v))

    def rhs(self, y):
        u, v, du, dv = y[0], y[1], y[2], y[3]
        E, F, G, Eu, Ev, Fu, Fv, Gu, Gv = self._form(u, v)
        det = E * G - F * F
        if not det > self.eps_reg:
            raise KernelError(STATUS_SINGULAR, -1, -1, f"singular metric (EG-F^2={det:.3e})")
        uu, uv, vv = du * du, du * dv, dv * dv
        r1 = -0.5 * Eu * uu - Ev * uv + (0.5 * Gu - Fv) * vv
        r2 = (0.5 * Ev - Fu) * uu - Gu * uv - 0.5 * Gv * vv
        q = E * uu + 2.0 * F * uv + G * vv
        return (du, dv, (G * r1 - F * r2) / det, (E * r2 - F * r1) / det, math.sqrt(max(q, 0.0)))

    def _inside(self, y):
        if self.u_period <= 0.0:
            slack = 1e-9 * (self.u_hi - self.u_lo)
            if not (self.u_lo - slack <= y[0] <= self.u_hi + slack):
                return False
        if self.v_period <= 0.0:
            slack = 1e-9 * (self.v_hi - self.v_lo)
            if not (self.v_lo - slack <= y[1] <= self.v_hi + slack):
                return False
        return True

    def integrate(self, y0, t_end, rtol, atol, h_max, h_init, max_steps):
        """Integrate from t=0 to ``t_end``.

        Returns ``(status, tape, index, message, T, Y, dY)`` with the accepted
        nodes, their states and slopes; on failure the arrays hold the
        accepted prefix.
        """
        n = 5
        y = [float(c) for c in y0]
        T, Y, D = [0.0], [list(y)], []
        try:
            f = list(self.rhs(y))
        except KernelError as exc:
            return exc.status, exc.tape, exc.index, exc.message, T, Y, [[0.0] * n]
        D.append(f)
        t = 0.0
        h = min(h_init, h_max, t_end) if h_init > 0 else min(h_max, t_end, 0.01)
        status, tape, index, message = STATUS_OK, -1, -1, ""
        steps = 0
        while t < t_end:
            if steps >= max_steps:
                status, message = STATUS_MAX_STEPS, "maximum number of steps exceeded"
                break
            last = t + h >= t_end * (1.0 - 1e-15)
            if last:
                h = t_end - t
            k = [f]
            try:
                for s in range(1, 7):
                    a = _A[s]
                    ys = [y[i] + h * sum(a[j] * k[j][i] for j in range(s)) for i in range(n)]
                    k.append(self.rhs(ys))
            except KernelError as exc:
                if h < 1e-12 * max(1.0, t):
                    status, tape, index, message = exc.status, exc.tape, exc.index, exc.message
                    break
                h *= 0.25
                continue
            ynew = ys  # stage 7 is evaluated at the fifth-order solution
            err = 0.0
            for i in range(n):
                e = h * sum(_E[j] * k[j][i] for j in range(7))
                sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
                err = max(err, abs(e) / sc)
            if err <= 1.0:
                if not self._inside(ynew):
                    status, message = STATUS_DOMAIN_EXIT, "left the parameter domain"
                    break
                t = t_end if last else t + h
                y = list(ynew)
                f = list(k[6])
                T.append(t)
                Y.append(y)
                D.append(f)
                steps += 1
                fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            else:
                fac = max(0.2, 0.9 * err ** -0.2)
            h = min(h * fac, h_max)
            if h < 1e-14 * max(1.0, abs(t)):
                status, message = STATUS_UNDERFLOW, "step size underflow"
                break
        return status, tape, index, message, np.array(T), np.array(Y), np.array(D)
