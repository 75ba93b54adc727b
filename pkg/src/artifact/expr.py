"""Scalar expressions: parsing, evaluation, jets and tape compilation.

Grammar (whitespace is insignificant)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := primary ('^' unary)?
    primary := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus and is right-associative, so ``-u^2``
is ``-(u^2)`` and ``2^3^2`` is ``2^(3^2)``.  Names are either declared
variables, the constants ``pi`` and ``e`` (a declared variable shadows
them), or one of the functions in :data:`FUNCTION_NAMES`.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

from . import jet as _jet
from .jet import Jet2, JetDomainError

FUNCTION_NAMES = ("sin", "cos", "tan", "sinh", "cosh", "tanh",
                  "exp", "log", "sqrt", "neg", "abs")
CONSTANTS = {"pi": math.pi, "e": math.e}
BINARY_OPS = ("+", "-", "*", "/", "^")


class ExprError(ValueError):
    """Base class for expression errors; ``offset`` is a byte offset into the source."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class ExprSyntaxError(ExprError):
    pass


class ExprDomainError(ExprError, ArithmeticError):
    pass


# -- tree -------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Unary:
    fn: str
    arg: "Node"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"
    pos: int = field(default=0, compare=False)


Node = Union[Const, Var, Unary, Binary]


@dataclass(frozen=True)
class Expr:
    """Parsed expression over a declared, ordered set of variables."""

    root: Node
    variables: tuple[str, ...]
    source: str = field(default="", compare=False)

    def __call__(self, *args: float, **kwargs: float) -> float:
        env = dict(zip(self.variables, args))
        env.update(kwargs)
        return evaluate(self, env)

    def __str__(self) -> str:
        return unparse(self)

    def free_variables(self) -> set[str]:
        return _free_vars(self.root)

    def is_constant(self) -> bool:
        return not self.free_variables()


# -- tokenizer & parser ----------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


def _byte_offset(text: str, i: int) -> int:
    return len(text[:i].encode("utf-8"))


def _tokenize(text: str):
    tokens = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[i]!r}", _byte_offset(text, i))
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), _byte_offset(text, i)))
        i = m.end()
    tokens.append(("end", "", _byte_offset(text, len(text))))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.vars = set(variables)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.take()
        if kind == "end" or text != value:
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos)

    def parse(self) -> Node:
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            _, op, pos = self.take()
            node = Binary(op, node, self.term(), pos)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            _, op, pos = self.take()
            node = Binary(op, node, self.unary(), pos)
        return node

    def unary(self) -> Node:
        kind, text, pos = self.peek()
        if kind == "op" and text in ("-", "+"):
            self.take()
            operand = self.unary()
            return Unary("neg", operand, pos) if text == "-" else operand
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        kind, text, pos = self.peek()
        if kind == "op" and text == "^":
            self.take()
            return Binary("^", base, self.unary(), pos)
        return base

    def primary(self) -> Node:
        kind, text, pos = self.take()
        if kind == "num":
            return Const(float(text), pos)
        if kind == "name":
            if self.peek()[1] == "(":
                if text not in FUNCTION_NAMES:
                    raise ExprSyntaxError(f"unknown function {text!r}", pos)
                self.take()
                arg = self.expr()
                nkind, ntext, npos = self.peek()
                if ntext == ",":
                    raise ExprSyntaxError(f"function {text!r} takes exactly one argument", npos)
                self.expect(")")
                return Unary(text, arg, pos)
            if text in self.vars:
                return Var(text, pos)
            if text in CONSTANTS:
                return Const(CONSTANTS[text], pos)
            if text in FUNCTION_NAMES:
                raise ExprSyntaxError(f"function {text!r} requires an argument", pos)
            raise ExprSyntaxError(f"unknown identifier {text!r}", pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", pos)


def parse_expr(text: str, variables: Sequence[str] = ("u", "v")) -> Expr:
    """Parse ``text`` into an :class:`Expr` over ``variables``.

    Raises :class:`ExprSyntaxError` with the byte offset of the offending
    token for malformed input, unknown identifiers and arity mismatches.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    variables = tuple(variables)
    root = _Parser(text, variables).parse()
    return Expr(root, variables, text)


def as_expr(e: "Expr | str | float", variables: Sequence[str]) -> Expr:
    if isinstance(e, Expr):
        extra = e.free_variables() - set(variables)
        if extra:
            raise ExprSyntaxError(f"unexpected variables {sorted(extra)}")
        return Expr(e.root, tuple(variables), e.source)
    if isinstance(e, (int, float)):
        return Expr(Const(float(e)), tuple(variables), repr(float(e)))
    return parse_expr(e, variables)


def _free_vars(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Const):
        return set()
    if isinstance(node, Unary):
        return _free_vars(node.arg)
    return _free_vars(node.left) | _free_vars(node.right)


# -- unparse ----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _fmt_const(c: float) -> str:
    if c == math.pi:
        return "pi"
    text = repr(float(c))
    if text in ("inf", "-inf", "nan"):
        raise ExprError(f"cannot write non-finite constant {text}")
    return text


def _unparse(node: Node) -> tuple[str, int]:
    if isinstance(node, Const):
        text = _fmt_const(abs(node.value))
        if node.value < 0 or math.copysign(1.0, node.value) < 0:
            return "-" + text, _PREC["neg"]
        return text, 5
    if isinstance(node, Var):
        return node.name, 5
    if isinstance(node, Unary):
        inner, p = _unparse(node.arg)
        if node.fn == "neg":
            if p < _PREC["neg"]:
                inner = f"({inner})"
            return "-" + inner, _PREC["neg"]
        return f"{node.fn}({inner})", 5
    prec = _PREC[node.op]
    left, lp = _unparse(node.left)
    right, rp = _unparse(node.right)
    if node.op == "^":
        # base must bind tighter than ^; the exponent may be a unary minus
        if lp <= prec:
            left = f"({left})"
        if rp < _PREC["neg"]:
            right = f"({right})"
    else:
        if lp < prec:
            left = f"({left})"
        if rp <= prec:
            right = f"({right})"
    return f"{left} {node.op} {right}", prec


def unparse(e: Expr | Node) -> str:
    """Render an expression so that :func:`parse_expr` rebuilds an equal tree."""
    node = e.root if isinstance(e, Expr) else e
    return _unparse(node)[0]


# -- plain evaluation -------------------------------------------------------

def _domain(msg: str, node: Node) -> ExprDomainError:
    return ExprDomainError(msg, node.pos)


_FLOAT_FUNCS = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "sinh": math.sinh, "cosh": math.cosh, "tanh": math.tanh,
    "exp": math.exp, "abs": abs, "neg": lambda a: -a,
}


def _constant_exponent(node: Node) -> float | None:
    if _free_vars(node):
        return None
    return _eval(node, {})


def _eval(node: Node, env: Mapping[str, float]) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        try:
            return float(env[node.name])
        except KeyError:
            raise ExprError(f"no value for variable {node.name!r}", node.pos) from None
    if isinstance(node, Unary):
        a = _eval(node.arg, env)
        if node.fn == "log":
            if a <= 0.0:
                raise _domain("log of non-positive value", node)
            return math.log(a)
        if node.fn == "sqrt":
            if a < 0.0:
                raise _domain("sqrt of negative value", node)
            return math.sqrt(a)
        try:
            return _FLOAT_FUNCS[node.fn](a)
        except OverflowError:
            raise _domain(f"overflow in {node.fn}", node) from None
    a = _eval(node.left, env)
    b = _eval(node.right, env)
    op = node.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0.0:
            raise _domain("division by zero", node)
        return a / b
    if float(b).is_integer():
        if a == 0.0 and b < 0:
            raise _domain("division by zero", node)
        if abs(b) <= 1 << 20:
            k = int(b)
            return _jet.ipow(a, k) if k >= 0 else 1.0 / _jet.ipow(a, -k)
        return a ** b
    if a <= 0.0:
        raise _domain("non-integer power of non-positive base", node)
    return a ** b


def evaluate(e: Expr, env: Mapping[str, float]) -> float:
    """Evaluate ``e`` at the point given by ``env`` (variable name -> value)."""
    return _eval(e.root, env)


# -- jet evaluation ---------------------------------------------------------

def _eval_jet(node: Node, seeds: Mapping[str, Jet2]) -> Jet2:
    if isinstance(node, Const):
        return Jet2(node.value)
    if isinstance(node, Var):
        try:
            return seeds[node.name]
        except KeyError:
            raise ExprError(f"no seed for variable {node.name!r}", node.pos) from None
    try:
        if isinstance(node, Unary):
            return _jet.FUNCTIONS[node.fn](_eval_jet(node.arg, seeds))
        a = _eval_jet(node.left, seeds)
        if node.op == "^":
            n = _constant_exponent(node.right)
            if n is not None:
                return _jet.power(a, n)
            b = _eval_jet(node.right, seeds)
            if not any(b[1:]):
                return _jet.power(a, b.val)
            return _jet.exp(b * _jet.log(a))
        b = _eval_jet(node.right, seeds)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    except JetDomainError as exc:
        raise _domain(str(exc), node) from None
    except OverflowError:
        raise _domain("overflow", node) from None


def eval_jet(e: Expr, seeds: Mapping[str, Jet2 | float]) -> Jet2:
    """Second-order Taylor coefficients of ``e`` at the seed point.

    Plain numbers in ``seeds`` are treated as constants (zero derivatives).
    """
    lifted = {k: s if isinstance(s, Jet2) else Jet2(float(s)) for k, s in seeds.items()}
    return _eval_jet(e.root, lifted)


# -- tape compilation -------------------------------------------------------

OP_CONST, OP_VAR, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_NEG = range(7)
OP_POWI, OP_POWR, OP_POW = 7, 8, 9
UNARY_OPCODES = {"sin": 10, "cos": 11, "tan": 12, "sinh": 13, "cosh": 14,
                 "tanh": 15, "exp": 16, "log": 17, "sqrt": 18, "abs": 19}
_BINARY_OPCODES = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV}


@dataclass(frozen=True)
class Tape:
    """Straight-line program for an expression; slot ``k`` holds instruction ``k``'s result.

    Each instruction is ``(opcode, a, b, c)`` where ``a``/``b`` are operand
    slots (or the variable index for ``OP_VAR``) and ``c`` a constant.  The
    last instruction is the result.
    """

    code: tuple[tuple[int, int, int, float], ...]
    positions: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.code)


def compile_tape(e: Expr, variables: Sequence[str] | None = None) -> Tape:
    variables = tuple(variables if variables is not None else e.variables)
    code: list[tuple[int, int, int, float]] = []
    positions: list[int] = []

    def emit(op, a=0, b=0, c=0.0, pos=0):
        code.append((op, a, b, float(c)))
        positions.append(pos)
        return len(code) - 1

    def walk(node: Node) -> int:
        if isinstance(node, Const):
            return emit(OP_CONST, c=node.value, pos=node.pos)
        if isinstance(node, Var):
            return emit(OP_VAR, a=variables.index(node.name), pos=node.pos)
        if isinstance(node, Unary):
            a = walk(node.arg)
            if node.fn == "neg":
                return emit(OP_NEG, a, pos=node.pos)
            return emit(UNARY_OPCODES[node.fn], a, pos=node.pos)
        if node.op == "^":
            n = _constant_exponent(node.right)
            a = walk(node.left)
            if n is not None:
                if float(n).is_integer() and abs(n) <= 1 << 20:
                    return emit(OP_POWI, a, c=n, pos=node.pos)
                return emit(OP_POWR, a, c=n, pos=node.pos)
            b = walk(node.right)
            return emit(OP_POW, a, b, pos=node.pos)
        a = walk(node.left)
        b = walk(node.right)
        return emit(_BINARY_OPCODES[node.op], a, b, pos=node.pos)

    walk(e.root)
    return Tape(tuple(code), tuple(positions))
