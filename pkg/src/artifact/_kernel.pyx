# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled surface kernel: tape-interpreted jets, geodesic RHS and DOPRI5.

Same interface and numerics as ``_kernel_py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, tan, sinh, cosh, tanh, exp, log, sqrt, fabs, pow, fmod

cnp.import_array()

BACKEND = "cython"

STATUS_OK = 0
STATUS_EXPR = 1
STATUS_SINGULAR = 2
STATUS_DOMAIN_EXIT = 3
STATUS_UNDERFLOW = 4
STATUS_MAX_STEPS = 5

DEF OP_CONST = 0
DEF OP_VAR = 1
DEF OP_ADD = 2
DEF OP_SUB = 3
DEF OP_MUL = 4
DEF OP_DIV = 5
DEF OP_NEG = 6
DEF OP_POWI = 7
DEF OP_POWR = 8
DEF OP_POW = 9
DEF OP_SIN = 10
DEF OP_COS = 11
DEF OP_TAN = 12
DEF OP_SINH = 13
DEF OP_COSH = 14
DEF OP_TANH = 15
DEF OP_EXP = 16
DEF OP_LOG = 17
DEF OP_SQRT = 18
DEF OP_ABS = 19

cdef double[7] DP_C = [0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0]
cdef double[7][6] DP_A = [
    [0, 0, 0, 0, 0, 0],
    [1.0 / 5, 0, 0, 0, 0, 0],
    [3.0 / 40, 9.0 / 40, 0, 0, 0, 0],
    [44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0],
    [19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0],
    [9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0],
    [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84],
]
cdef double[7] DP_E = [71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920,
                       -17253.0 / 339200, 22.0 / 525, -1.0 / 40]


class KernelError(ArithmeticError):
    def __init__(self, status, tape=-1, index=-1, message=""):
        super().__init__(message or f"kernel status {status}")
        self.status = status
        self.tape = tape
        self.index = index
        self.message = message


_MESSAGES = {
    OP_DIV: "division by zero",
    OP_POWI: "division by zero",
    OP_POWR: "non-integer power of non-positive base",
    OP_POW: "non-integer power of non-positive base",
    OP_TAN: "tan at a pole",
    OP_LOG: "log of non-positive value",
    OP_SQRT: "sqrt of negative value or non-differentiable at 0",
    OP_ABS: "abs is not differentiable at 0",
}


cdef inline void jmul(double* a, double* b, double* r) noexcept nogil:
    cdef double v0 = a[0] * b[0]
    cdef double v1 = a[1] * b[0] + a[0] * b[1]
    cdef double v2 = a[2] * b[0] + a[0] * b[2]
    cdef double v3 = a[3] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[3]
    cdef double v4 = a[4] * b[0] + a[1] * b[2] + a[2] * b[1] + a[0] * b[4]
    cdef double v5 = a[5] * b[0] + 2.0 * a[2] * b[2] + a[0] * b[5]
    r[0] = v0; r[1] = v1; r[2] = v2; r[3] = v3; r[4] = v4; r[5] = v5


cdef inline void jchain(double* a, double f0, double f1, double f2, double* r) noexcept nogil:
    cdef double a1 = a[1], a2 = a[2]
    r[3] = f2 * a1 * a1 + f1 * a[3]
    r[4] = f2 * a1 * a2 + f1 * a[4]
    r[5] = f2 * a2 * a2 + f1 * a[5]
    r[1] = f1 * a1
    r[2] = f1 * a2
    r[0] = f0


cdef inline bint has_derivs(double* a) noexcept nogil:
    return a[1] != 0.0 or a[2] != 0.0 or a[3] != 0.0 or a[4] != 0.0 or a[5] != 0.0


cdef inline int jrecip(double* b, double* r) noexcept nogil:
    if b[0] == 0.0:
        return 1
    cdef double q = 1.0 / b[0]
    jchain(b, q, -q * q, 2.0 * q * q * q, r)
    return 0


cdef class SurfaceKernel:
    cdef public double u_lo, u_hi, u_period, v_lo, v_hi, v_period, eps_reg
    cdef int[3] ntape
    cdef int[3] start
    cdef int[:, ::1] ops
    cdef double[::1] consts
    cdef double[:, ::1] work
    cdef int err_tape, err_index
    cdef public str backend

    def __init__(self, tx, ty, tz, u_lo, u_hi, u_period, v_lo, v_hi, v_period, eps_reg):
        self.u_lo, self.u_hi, self.u_period = u_lo, u_hi, u_period
        self.v_lo, self.v_hi, self.v_period = v_lo, v_hi, v_period
        self.eps_reg = eps_reg
        self.backend = BACKEND
        rows, consts = [], []
        offset = 0
        for i, tape in enumerate((tx, ty, tz)):
            code = tape.code
            self.ntape[i] = len(code)
            self.start[i] = offset
            for c in code:
                # operand slots become absolute rows; OP_VAR keeps its variable index
                if c[0] == OP_VAR:
                    rows.append([c[0], c[1], c[2]])
                else:
                    rows.append([c[0], c[1] + offset, c[2] + offset])
                consts.append(c[3])
            offset += len(code)
        self.ops = np.ascontiguousarray(rows, dtype=np.intc).reshape(-1, 3)
        self.consts = np.ascontiguousarray(consts, dtype=np.float64)
        self.work = np.zeros((offset, 6), dtype=np.float64)

    cdef int eval_tape(self, int t, double u, double v, bint derivs) noexcept nogil:
        cdef int k, op, a, b, n, m, i
        cdef double x, p, s, c, q
        cdef double[:, ::1] w = self.work
        cdef int[:, ::1] ops = self.ops
        cdef double[::1] cs = self.consts
        cdef double* r
        cdef double* pa
        cdef double* pb
        cdef double[6] tmp
        cdef double[6] base
        for k in range(self.start[t], self.start[t] + self.ntape[t]):
            op = ops[k, 0]
            a = ops[k, 1]
            b = ops[k, 2]
            r = &w[k, 0]
            pa = &w[a, 0] if op != OP_VAR and op != OP_CONST else r
            pb = &w[b, 0] if op >= OP_ADD and op <= OP_DIV or op == OP_POW else r
            if op == OP_CONST:
                r[0] = cs[k]; r[1] = 0.0; r[2] = 0.0; r[3] = 0.0; r[4] = 0.0; r[5] = 0.0
            elif op == OP_VAR:
                r[0] = u if a == 0 else v
                r[1] = 1.0 if (derivs and a == 0) else 0.0
                r[2] = 1.0 if (derivs and a == 1) else 0.0
                r[3] = 0.0; r[4] = 0.0; r[5] = 0.0
            elif op == OP_ADD:
                for m in range(6):
                    r[m] = pa[m] + pb[m]
            elif op == OP_SUB:
                for m in range(6):
                    r[m] = pa[m] - pb[m]
            elif op == OP_NEG:
                for m in range(6):
                    r[m] = -pa[m]
            elif op == OP_MUL:
                jmul(pa, pb, r)
            elif op == OP_DIV:
                if jrecip(pb, tmp):
                    self.err_tape = t; self.err_index = k - self.start[t]
                    return 1
                jmul(pa, tmp, r)
            elif op == OP_POWI:
                n = <int> cs[k]
                m = n if n >= 0 else -n
                tmp[0] = 1.0; tmp[1] = 0.0; tmp[2] = 0.0; tmp[3] = 0.0; tmp[4] = 0.0; tmp[5] = 0.0
                for i in range(6):
                    base[i] = pa[i]
                while m:
                    if m & 1:
                        jmul(tmp, base, tmp)
                    m >>= 1
                    if m:
                        jmul(base, base, base)
                if n < 0:
                    if jrecip(tmp, r):
                        self.err_tape = t; self.err_index = k - self.start[t]
                        return 1
                else:
                    for m in range(6):
                        r[m] = tmp[m]
            elif op == OP_POWR:
                x = pa[0]
                if x <= 0.0:
                    self.err_tape = t; self.err_index = k - self.start[t]
                    return 1
                q = cs[k]
                p = pow(x, q)
                jchain(pa, p, q * p / x, q * (q - 1.0) * p / (x * x), r)
            elif op == OP_POW:
                x = pa[0]
                if x <= 0.0:
                    self.err_tape = t; self.err_index = k - self.start[t]
                    return 1
                q = 1.0 / x
                jchain(pa, log(x), q, -q * q, tmp)
                jmul(pb, tmp, tmp)
                s = exp(tmp[0])
                jchain(tmp, s, s, s, r)
            elif op == OP_SIN:
                s = sin(pa[0]); c = cos(pa[0])
                jchain(pa, s, c, -s, r)
            elif op == OP_COS:
                s = sin(pa[0]); c = cos(pa[0])
                jchain(pa, c, -s, -c, r)
            elif op == OP_TAN:
                if cos(pa[0]) == 0.0:
                    self.err_tape = t; self.err_index = k - self.start[t]
                    return 1
                s = tan(pa[0]); c = 1.0 + s * s
                jchain(pa, s, c, 2.0 * s * c, r)
            elif op == OP_SINH:
                s = sinh(pa[0]); c = cosh(pa[0])
                jchain(pa, s, c, s, r)
            elif op == OP_COSH:
                s = sinh(pa[0]); c = cosh(pa[0])
                jchain(pa, c, s, c, r)
            elif op == OP_TANH:
                s = tanh(pa[0]); c = 1.0 - s * s
                jchain(pa, s, c, -2.0 * s * c, r)
            elif op == OP_EXP:
                s = exp(pa[0])
                jchain(pa, s, s, s, r)
            elif op == OP_LOG:
                x = pa[0]
                if x <= 0.0:
                    self.err_tape = t; self.err_index = k - self.start[t]
                    return 1
                q = 1.0 / x
                jchain(pa, log(x), q, -q * q, r)
            elif op == OP_SQRT:
                x = pa[0]
                if x < 0.0 or (x == 0.0 and has_derivs(pa)):
                    self.err_tape = t; self.err_index = k - self.start[t]
                    return 1
                s = sqrt(x)
                if x == 0.0:
                    r[0] = 0.0; r[1] = 0.0; r[2] = 0.0; r[3] = 0.0; r[4] = 0.0; r[5] = 0.0
                else:
                    jchain(pa, s, 0.5 / s, -0.25 / (s * x), r)
            elif op == OP_ABS:
                x = pa[0]
                if x == 0.0 and has_derivs(pa):
                    self.err_tape = t; self.err_index = k - self.start[t]
                    return 1
                jchain(pa, fabs(x), 1.0 if x > 0.0 else -1.0, 0.0, r)
        return 0

    cdef inline void wrap(self, double* u, double* v) noexcept nogil:
        cdef double d
        if self.u_period > 0.0:
            d = fmod(u[0] - self.u_lo, self.u_period)
            if d < 0.0:
                d += self.u_period
            u[0] = self.u_lo + d
        if self.v_period > 0.0:
            d = fmod(v[0] - self.v_lo, self.v_period)
            if d < 0.0:
                d += self.v_period
            v[0] = self.v_lo + d

    cdef int c_form(self, double u, double v, double* out) noexcept nogil:
        cdef int t
        cdef double* j[3]
        self.wrap(&u, &v)
        for t in range(3):
            if self.eval_tape(t, u, v, True):
                return 1
            j[t] = &self.work[self.start[t] + self.ntape[t] - 1, 0]
        # out: E F G Eu Ev Fu Fv Gu Gv
        cdef double E = 0, F = 0, G = 0, Eu = 0, Ev = 0, Fu = 0, Fv = 0, Gu = 0, Gv = 0
        for t in range(3):
            E += j[t][1] * j[t][1]
            F += j[t][1] * j[t][2]
            G += j[t][2] * j[t][2]
            Eu += 2.0 * j[t][1] * j[t][3]
            Ev += 2.0 * j[t][1] * j[t][4]
            Fu += j[t][3] * j[t][2] + j[t][1] * j[t][4]
            Fv += j[t][4] * j[t][2] + j[t][1] * j[t][5]
            Gu += 2.0 * j[t][2] * j[t][4]
            Gv += 2.0 * j[t][2] * j[t][5]
        out[0] = E; out[1] = F; out[2] = G; out[3] = Eu; out[4] = Ev
        out[5] = Fu; out[6] = Fv; out[7] = Gu; out[8] = Gv
        return 0

    cdef int c_rhs(self, double* y, double* f) noexcept nogil:
        cdef double[9] m
        if self.c_form(y[0], y[1], m):
            return 1
        cdef double E = m[0], F = m[1], G = m[2]
        cdef double det = E * G - F * F
        if not det > self.eps_reg:
            return 2
        cdef double du = y[2], dv = y[3]
        cdef double uu = du * du, uv = du * dv, vv = dv * dv
        cdef double r1 = -0.5 * m[3] * uu - m[4] * uv + (0.5 * m[7] - m[6]) * vv
        cdef double r2 = (0.5 * m[4] - m[5]) * uu - m[7] * uv - 0.5 * m[8] * vv
        cdef double q = E * uu + 2.0 * F * uv + G * vv
        f[0] = du
        f[1] = dv
        f[2] = (G * r1 - F * r2) / det
        f[3] = (E * r2 - F * r1) / det
        f[4] = sqrt(q) if q > 0.0 else 0.0
        return 0

    cdef object _error(self, int status):
        if status == 1:
            op = self.ops[self.start[self.err_tape] + self.err_index, 0]
            return KernelError(1, self.err_tape, self.err_index, _MESSAGES.get(op, "domain error"))
        return KernelError(2, -1, -1, "singular metric")

    def point(self, double u, double v):
        cdef int t
        self.wrap(&u, &v)
        out = []
        for t in range(3):
            if self.eval_tape(t, u, v, False):
                raise self._error(1)
            out.append(self.work[self.start[t] + self.ntape[t] - 1, 0])
        return tuple(out)

    def form(self, double u, double v):
        cdef double[9] m
        if self.c_form(u, v, m):
            raise self._error(1)
        return (m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7], m[8])

    def rhs(self, y):
        cdef double[5] yy
        cdef double[5] f
        cdef int i, st
        for i in range(4):
            yy[i] = y[i]
        yy[4] = y[4] if len(y) > 4 else 0.0
        st = self.c_rhs(yy, f)
        if st == 2:
            m = self.form(yy[0], yy[1])
            det = m[0] * m[2] - m[1] ** 2
            raise KernelError(2, -1, -1, f"singular metric (EG-F^2={det:.3e})")
        if st:
            raise self._error(st)
        return (f[0], f[1], f[2], f[3], f[4])

    cdef bint inside(self, double* y) noexcept nogil:
        cdef double slack
        if self.u_period <= 0.0:
            slack = 1e-9 * (self.u_hi - self.u_lo)
            if not (self.u_lo - slack <= y[0] <= self.u_hi + slack):
                return False
        if self.v_period <= 0.0:
            slack = 1e-9 * (self.v_hi - self.v_lo)
            if not (self.v_lo - slack <= y[1] <= self.v_hi + slack):
                return False
        return True

    def integrate(self, y0, double t_end, double rtol, double atol, double h_max,
                  double h_init, long max_steps):
        cdef int n = 5, i, j, s, st = 0
        cdef double[5] y
        cdef double[5] ys
        cdef double[7][5] k
        cdef double t = 0.0, h, err, e, sc, fac, acc
        cdef bint last
        cdef long steps = 0, cap = 256, count = 1
        cdef cnp.ndarray[cnp.float64_t, ndim=1] T = np.empty(cap)
        cdef cnp.ndarray[cnp.float64_t, ndim=2] Y = np.empty((cap, 5))
        cdef cnp.ndarray[cnp.float64_t, ndim=2] D = np.empty((cap, 5))
        status, tape, index, message = STATUS_OK, -1, -1, ""
        for i in range(n):
            y[i] = y0[i]
        T[0] = 0.0
        for i in range(n):
            Y[0, i] = y[i]
        st = self.c_rhs(y, k[0])
        if st:
            exc = self._error(st)
            D[0, :] = 0.0
            return exc.status, exc.tape, exc.index, exc.message, T[:1].copy(), Y[:1].copy(), D[:1].copy()
        for i in range(n):
            D[0, i] = k[0][i]
        if h_init > 0:
            h = min(h_init, h_max, t_end)
        else:
            h = min(h_max, t_end, 0.01)
        while t < t_end:
            if steps >= max_steps:
                status, message = STATUS_MAX_STEPS, "maximum number of steps exceeded"
                break
            last = t + h >= t_end * (1.0 - 1e-15)
            if last:
                h = t_end - t
            st = 0
            for s in range(1, 7):
                for i in range(n):
                    acc = 0.0
                    for j in range(s):
                        acc += DP_A[s][j] * k[j][i]
                    ys[i] = y[i] + h * acc
                st = self.c_rhs(ys, k[s])
                if st:
                    break
            if st:
                if h < 1e-12 * max(1.0, t):
                    exc = self._error(st)
                    status, tape, index, message = exc.status, exc.tape, exc.index, exc.message
                    break
                h *= 0.25
                continue
            err = 0.0
            for i in range(n):
                e = 0.0
                for j in range(7):
                    e += DP_E[j] * k[j][i]
                e *= h
                sc = atol + rtol * max(fabs(y[i]), fabs(ys[i]))
                err = max(err, fabs(e) / sc)
            if err <= 1.0:
                if not self.inside(ys):
                    status, message = STATUS_DOMAIN_EXIT, "left the parameter domain"
                    break
                t = t_end if last else t + h
                for i in range(n):
                    y[i] = ys[i]
                    k[0][i] = k[6][i]
                if count == cap:
                    cap *= 2
                    T = np.resize(T, cap)
                    Y = np.resize(Y, (cap, 5))
                    D = np.resize(D, (cap, 5))
                T[count] = t
                for i in range(n):
                    Y[count, i] = y[i]
                    D[count, i] = k[0][i]
                count += 1
                steps += 1
                fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * pow(err, -0.2)))
            else:
                fac = max(0.2, 0.9 * pow(err, -0.2))
            h = min(h * fac, h_max)
            if h < 1e-14 * max(1.0, fabs(t)):
                status, message = STATUS_UNDERFLOW, "step size underflow"
                break
        return status, tape, index, message, T[:count].copy(), Y[:count].copy(), D[:count].copy()
