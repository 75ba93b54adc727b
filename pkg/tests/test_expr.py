import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artifact.expr import (Binary, Const, ExprDomainError, ExprSyntaxError, Unary, Var,
                           compile_tape, eval_jet, parse_expr, unparse)
from artifact.jet import Jet2

from test_jet import close, fd_partials

UV = ("u", "v")


def seeds(u, v):
    return {"u": Jet2.seed(u, 0), "v": Jet2.seed(v, 1)}


# -- parsing ----------------------------------------------------------------

def test_precedence_sum_of_product():
    e = parse_expr("u + v*v", UV)
    assert e.root == Binary("+", Var("u"), Binary("*", Var("v"), Var("v")))


def test_function_application_product():
    e = parse_expr("sin(u)*cos(v)", UV)
    assert e.root == Binary("*", Unary("sin", Var("u")), Unary("cos", Var("v")))


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as err:
        parse_expr("u +", UV)
    assert err.value.offset == 3


@pytest.mark.parametrize("text, value", [
    ("2^3^2", 512.0),          # right associative
    ("-2^2", -4.0),            # ^ binds tighter than unary minus
    ("8/4/2", 1.0),            # left associative
    ("10-4-3", 3.0),
    ("2*-3", -6.0),
    ("(1+2)*3", 9.0),
    ("2^-1", 0.5),
    ("pi", math.pi),
    ("e", math.e),
    ("1.5e2 + .5", 150.5),
    ("abs(-3) + sqrt(16)", 7.0),
])
def test_constant_expressions(text, value):
    assert parse_expr(text, ())() == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("text", ["", "   ", "u v", "(u", "u)", "sin u", "foo(u)", "w + 1",
                                  "sin(u, v)", "u ** 2", "1.2.3", "u # v", "sin()"])
def test_parse_errors(text):
    with pytest.raises(ExprSyntaxError):
        parse_expr(text, UV)


def test_unknown_identifier_names_offset():
    with pytest.raises(ExprSyntaxError) as err:
        parse_expr("u + w", UV)
    assert err.value.offset == 4
    assert "w" in str(err.value)


def test_variables_declared_per_expression():
    e = parse_expr("x*sqrt(1+p^2) + y", ("x", "y", "p"))
    assert e.free_variables() == {"x", "y", "p"}
    assert e(2.0, 1.0, 0.0) == 3.0
    assert e(x=1.0, y=0.0, p=0.0) == 1.0
    assert parse_expr("2*pi", UV).is_constant()


# -- evaluation -------------------------------------------------------------

def test_jet_examples():
    j = eval_jet(parse_expr("u*v", UV), seeds(2, 3))
    assert (j.val, j.du, j.dv, j.duv, j.duu, j.dvv) == (6, 3, 2, 1, 0, 0)
    j = eval_jet(parse_expr("sin(u)", UV), seeds(0, 0))
    assert (j.val, j.du, j.duu) == (0, 1, 0)
    j = eval_jet(parse_expr("u^2 + v^2", UV), seeds(1, 2))
    assert (j.val, j.du, j.dv, j.duu, j.dvv, j.duv) == (5, 2, 4, 2, 2, 0)


@pytest.mark.parametrize("text, u, v", [
    ("log(u - 1)", 1.0, 0.0), ("log(u)", -1.0, 0.0), ("sqrt(v)", 0.0, -1.0),
    ("1/(u - v)", 2.0, 2.0), ("u^0.5", -2.0, 0.0), ("abs(u)", 0.0, 1.0),
])
def test_jet_domain_errors_carry_location(text, u, v):
    e = parse_expr(text, UV)
    with pytest.raises(ExprDomainError) as err:
        eval_jet(e, seeds(u, v))
    assert err.value.offset is not None and 0 <= err.value.offset < len(text)


@pytest.mark.parametrize("text, u, v", [
    ("log(u - 1)", 1.0, 0.0), ("sqrt(v)", 0.0, -1.0), ("1/(u - v)", 2.0, 2.0),
    ("(u-3)^0.5", 2.0, 0.0),
])
def test_plain_domain_errors(text, u, v):
    with pytest.raises(ExprDomainError):
        parse_expr(text, UV)(u, v)


def test_abs_at_zero_is_fine_without_derivatives():
    e = parse_expr("abs(u)", UV)
    assert e(0.0, 0.0) == 0.0
    assert eval_jet(e, {"u": 0.0, "v": 1.0}).val == 0.0


def test_integer_powers_of_negative_bases():
    e = parse_expr("u^3 + u^-2", UV)
    assert e(-2.0, 0.0) == -8.0 + 0.25
    assert eval_jet(e, seeds(-2.0, 0.0)).du == pytest.approx(12.0 + 0.25)


# -- random expressions -----------------------------------------------------
# built so every subexpression stays well defined on [0.3, 1.7]^2

_LEAF = st.one_of(st.sampled_from(["u", "v"]),
                  st.floats(0.25, 3.0).map(lambda c: f"{c:.3f}"))


def _extend(child):
    return st.one_of(
        st.tuples(st.sampled_from(["+", "-", "*"]), child, child).map(lambda t: f"({t[1]} {t[0]} {t[2]})"),
        st.tuples(child, child).map(lambda t: f"({t[0]})/(2 + sin({t[1]}))"),
        st.tuples(st.sampled_from(["sin", "cos", "tanh", "-"]), child).map(lambda t: f"{t[0]}({t[1]})"),
        child.map(lambda c: f"exp(sin({c}))"),
        child.map(lambda c: f"sqrt(1 + ({c})^2)"),
        child.map(lambda c: f"log(2 + cos({c}))"),
        child.map(lambda c: f"({c})^2"),
        child.map(lambda c: f"({c})^3"),
        child.map(lambda c: f"(2 + sin({c}))^-2"),
        st.tuples(child, child).map(lambda t: f"(2 + cos({t[0]}))^tanh({t[1]})"),
    )


EXPRS = st.recursive(_LEAF, _extend, max_leaves=6)
POINT = st.floats(0.3, 1.7)


@settings(max_examples=80, deadline=None)
@given(EXPRS, POINT, POINT)
def test_jets_match_finite_differences(text, u, v):
    e = parse_expr(text, UV)
    j = eval_jet(e, seeds(u, v))
    f = lambda a, b: e(a, b)  # noqa: E731
    fu, fv, fuu, fuv, fvv = fd_partials(f, u, v)
    scale = max(1.0, abs(j.val))
    for a, b in ((j.du, fu), (j.dv, fv)):
        assert abs(a - b) <= 1e-6 * max(abs(a), abs(b), scale)
    for a, b in ((j.duu, fuu), (j.duv, fuv), (j.dvv, fvv)):
        assert abs(a - b) <= 1e-4 * max(abs(a), abs(b), scale)


@settings(max_examples=80, deadline=None)
@given(EXPRS, POINT, POINT)
def test_constant_seeds_reproduce_plain_evaluation(text, u, v):
    e = parse_expr(text, UV)
    j = eval_jet(e, {"u": u, "v": v})
    assert j.val == e(u, v)
    assert j.d1 == (0.0, 0.0) and j.d2 == (0.0, 0.0, 0.0)


@settings(max_examples=80, deadline=None)
@given(EXPRS)
def test_unparse_round_trip(text):
    e = parse_expr(text, UV)
    back = parse_expr(unparse(e), UV)
    assert back.root == e.root
    pts = np.random.default_rng(0).uniform(0.3, 1.7, size=(100, 2))
    for u, v in pts:
        assert close(back(u, v), e(u, v), 1e-12)


@pytest.mark.parametrize("text", ["-(u^2)", "(-u)^2", "-u^-v", "u-(v-1)", "u/(v*2)", "(u^v)^2",
                                  "-(-u)", "2^3^u", "-1.5e-10*u", "u - -1"])
def test_unparse_edge_cases(text):
    e = parse_expr(text, UV)
    assert parse_expr(unparse(e), UV).root == e.root


def test_tape_has_positions():
    e = parse_expr("sin(u)*v + 2", UV)
    tape = compile_tape(e)
    assert len(tape) > 0
    assert len(tape.positions) == len(tape)
    assert isinstance(e.root, Binary) and isinstance(e.root.right, Const)
