"""Parametric surfaces r(u, v) and their first fundamental form."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import _backend
from .errors import DomainError, SingularPointError
from .expr import (Binary, Const, Expr, ExprDomainError, ExprError, Unary, Var,
                   as_expr, compile_tape, parse_expr, unparse)

EPS_REG = 1e-12
UV = ("u", "v")


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    periodic: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not self.lo < self.hi:
            raise DomainError(f"degenerate interval [{self.lo}, {self.hi}]")

    @property
    def period(self) -> float:
        return self.hi - self.lo if self.periodic else 0.0

    def wrap(self, x: float) -> float:
        if self.periodic:
            return self.lo + (x - self.lo) % self.period
        return x

    def contains(self, x: float, slack: float = 1e-12) -> bool:
        if self.periodic:
            return math.isfinite(x)
        pad = slack * (self.hi - self.lo)
        return self.lo - pad <= x <= self.hi + pad


@dataclass(frozen=True)
class SurfaceSpec:
    """A surface x(u,v), y(u,v), z(u,v) over a rectangular parameter domain."""

    name: str
    x: Expr
    y: Expr
    z: Expr
    u_range: Interval
    v_range: Interval
    eps_reg: float = field(default=EPS_REG, compare=False)

    def __post_init__(self):
        for label in ("x", "y", "z"):
            object.__setattr__(self, label, as_expr(getattr(self, label), UV))

    @cached_property
    def tapes(self):
        return tuple(compile_tape(e, UV) for e in (self.x, self.y, self.z))

    @cached_property
    def kernel(self):
        return make_kernel(self)

    def check_domain(self, u: float, v: float) -> None:
        if not self.u_range.contains(u):
            raise DomainError(f"u={u!r} outside [{self.u_range.lo}, {self.u_range.hi}]")
        if not self.v_range.contains(v):
            raise DomainError(f"v={v!r} outside [{self.v_range.lo}, {self.v_range.hi}]")

    def kernel_error(self, exc) -> Exception:
        """Translate a kernel error into the matching public exception."""
        if exc.status == 1:
            coord = "xyz"[exc.tape]
            offset = self.tapes[exc.tape].positions[exc.index]
            return ExprDomainError(f"{exc.message} in {coord}(u,v)", offset)
        return SingularPointError(exc.message)


def make_kernel(s: SurfaceSpec, backend: str | None = None):
    cls = _backend.SurfaceKernel if backend is None else _backend.available_backends()[backend].SurfaceKernel
    return cls(*s.tapes, s.u_range.lo, s.u_range.hi, s.u_range.period,
               s.v_range.lo, s.v_range.hi, s.v_range.period, s.eps_reg)


@dataclass(frozen=True)
class FundamentalForm:
    u: float
    v: float
    E: float
    F: float
    G: float
    E_u: float
    E_v: float
    F_u: float
    F_v: float
    G_u: float
    G_v: float

    @property
    def det(self) -> float:
        return self.E * self.G - self.F * self.F

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("u", "v", "E", "F", "G", "E_u", "E_v", "F_u", "F_v", "G_u", "G_v")}

    def matrix(self) -> np.ndarray:
        return np.array([[self.E, self.F], [self.F, self.G]])


class Regularity(NamedTuple):
    regular: bool
    det: float


def eval_point(s: SurfaceSpec, u: float, v: float) -> np.ndarray:
    """Embedded point r(u, v)."""
    s.check_domain(u, v)
    try:
        return np.array(s.kernel.point(u, v))
    except _backend.KERNEL_ERRORS as exc:
        raise s.kernel_error(exc) from None


def fundamental_form(s: SurfaceSpec, u: float, v: float) -> FundamentalForm:
    """E, F, G and their u/v partials at (u, v), from second-order jets of x, y, z."""
    s.check_domain(u, v)
    try:
        vals = s.kernel.form(u, v)
    except _backend.KERNEL_ERRORS as exc:
        raise s.kernel_error(exc) from None
    if not all(math.isfinite(c) for c in vals):
        raise ExprDomainError(f"non-finite fundamental form at ({u}, {v})")
    return FundamentalForm(float(u), float(v), *vals)


def tangent_vectors(s: SurfaceSpec, u: float, v: float) -> tuple[np.ndarray, np.ndarray]:
    """r_u and r_v from first-order jets (used for normals and frames)."""
    from .expr import eval_jet
    from .jet import Jet2

    s.check_domain(u, v)
    u, v = s.u_range.wrap(u), s.v_range.wrap(v)
    seeds = {"u": Jet2.seed(u, 0), "v": Jet2.seed(v, 1)}
    jets = [eval_jet(e, seeds) for e in (s.x, s.y, s.z)]
    return np.array([j.du for j in jets]), np.array([j.dv for j in jets])


def regularity_check(s: SurfaceSpec, u: float, v: float, eps: float | None = None) -> Regularity:
    eps = s.eps_reg if eps is None else eps
    try:
        ff = fundamental_form(s, u, v)
    except (ExprError, ArithmeticError):
        return Regularity(False, float("nan"))
    det = ff.det
    return Regularity(bool(det > eps), det)


# -- built-in surfaces ------------------------------------------------------

def _num(a: float) -> Const:
    return Const(float(a))


def _mul(a, b):
    return Binary("*", a, b)


def _expr(node) -> Expr:
    return Expr(node, UV, unparse(node))


def plane(extent: float = 100.0) -> SurfaceSpec:
    return SurfaceSpec("plane", _expr(Var("u")), _expr(Var("v")), _expr(Const(0.0)),
                       Interval(-extent, extent), Interval(-extent, extent))


def cylinder(a: float = 1.0, height: float = 100.0) -> SurfaceSpec:
    if not a > 0:
        raise DomainError("cylinder radius must be positive")
    u, v = Var("u"), Var("v")
    return SurfaceSpec(
        f"cylinder(a={a!r})",
        _expr(_mul(_num(a), Unary("cos", u))),
        _expr(_mul(_num(a), Unary("sin", u))),
        _expr(v),
        Interval(0.0, 2 * math.pi, periodic=True),
        Interval(-height, height),
    )


def sphere(a: float = 1.0) -> SurfaceSpec:
    """Sphere with u the longitude and v the colatitude."""
    if not a > 0:
        raise DomainError("sphere radius must be positive")
    u, v = Var("u"), Var("v")
    sv = Unary("sin", v)
    return SurfaceSpec(
        f"sphere(a={a!r})",
        _expr(_mul(_mul(_num(a), sv), Unary("cos", u))),
        _expr(_mul(_mul(_num(a), sv), Unary("sin", u))),
        _expr(_mul(_num(a), Unary("cos", v))),
        Interval(0.0, 2 * math.pi, periodic=True),
        Interval(0.0, math.pi),
    )


def revolution(f: Expr | str, interval: tuple[float, float], samples: int = 101) -> SurfaceSpec:
    """Surface swept by revolving y = f(x) about the x axis: (u, f(u) cos v, f(u) sin v)."""
    f = as_expr(f, ("u",))
    lo, hi = interval
    for t in np.linspace(lo, hi, samples):
        try:
            val = f(u=float(t))
        except ExprError as exc:
            raise DomainError(f"profile undefined at u={t}: {exc}") from None
        if not val > 0:
            raise DomainError(f"profile must be positive on [{lo}, {hi}]; f({t})={val}")
    u, v = Var("u"), Var("v")
    return SurfaceSpec(
        f"revolution(f={unparse(f)})",
        _expr(u),
        _expr(_mul(f.root, Unary("cos", v))),
        _expr(_mul(f.root, Unary("sin", v))),
        Interval(float(lo), float(hi)),
        Interval(0.0, 2 * math.pi, periodic=True),
    )


def builtin_surface(kind: str, **params) -> SurfaceSpec:
    """Build one of ``plane``, ``cylinder``, ``sphere`` or ``revolution``."""
    makers = {"plane": plane, "cylinder": cylinder, "sphere": sphere, "revolution": revolution}
    try:
        maker = makers[kind]
    except KeyError:
        raise DomainError(f"unknown built-in surface {kind!r}") from None
    return maker(**params)


# -- surface files ----------------------------------------------------------

_RANGE = re.compile(r"^([uv])\s+in\s+\[(.+),(.+)\]\s*(\(?periodic\)?)?\s*$")


def _const(text: str) -> float:
    e = parse_expr(text.strip(), ())
    return float(e())


def parse_surface(text: str) -> SurfaceSpec:
    """Read the line-oriented surface format (see README)."""
    fields: dict[str, str] = {}
    ranges: dict[str, Interval] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _RANGE.match(line)
        if m:
            var, lo, hi, per = m.groups()
            try:
                ranges[var] = Interval(_const(lo), _const(hi), periodic=bool(per))
            except ExprError as exc:
                raise DomainError(f"line {lineno}: bad bound: {exc}") from None
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in ("name", "x", "y", "z"):
            raise DomainError(f"line {lineno}: cannot parse {raw!r}")
        fields[key] = value.strip()
    missing = [k for k in ("x", "y", "z") if k not in fields] + \
        [f"{k} range" for k in UV if k not in ranges]
    if missing:
        raise DomainError(f"surface file missing {', '.join(missing)}")
    exprs = {k: parse_expr(fields[k], UV) for k in ("x", "y", "z")}
    return SurfaceSpec(fields.get("name", "surface"), exprs["x"], exprs["y"], exprs["z"],
                       ranges["u"], ranges["v"])


def format_surface(s: SurfaceSpec) -> str:
    lines = [f"name = {s.name}"]
    for label in ("x", "y", "z"):
        lines.append(f"{label} = {unparse(getattr(s, label))}")
    for var, rng in (("u", s.u_range), ("v", s.v_range)):
        tail = " periodic" if rng.periodic else ""
        lines.append(f"{var} in [{rng.lo!r}, {rng.hi!r}]{tail}")
    return "\n".join(lines) + "\n"


def load_surface(path) -> SurfaceSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_surface(fh.read())


_BUILTIN_SPEC = re.compile(r"^(plane|cylinder|sphere)(?::([-+0-9.eE]+))?$")


def resolve_surface(ref: str) -> SurfaceSpec:
    """Resolve a surface reference.

    Accepted forms: ``plane``, ``sphere``, ``sphere:2``, ``cylinder:0.5``,
    ``revolution:EXPR:LO:HI`` (profile y = EXPR over u in [LO, HI]) or the
    path of a surface file.
    """
    if ref.startswith("revolution:"):
        parts = ref.split(":")
        if len(parts) != 4:
            raise DomainError("expected revolution:EXPR:LO:HI")
        try:
            lo, hi = _const(parts[2]), _const(parts[3])
        except ExprError as exc:
            raise DomainError(f"bad revolution bound: {exc}") from None
        return revolution(parts[1], (lo, hi))
    m = _BUILTIN_SPEC.match(ref)
    if m:
        kind, a = m.groups()
        if kind == "plane":
            return plane()
        return builtin_surface(kind, a=float(a) if a else 1.0)
    return load_surface(ref)
