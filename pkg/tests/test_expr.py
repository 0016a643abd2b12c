"""Expression parser and evaluator tests."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infxlap.expressions import (BinOp, Call, DomainError, Neg, Num,
                                 ParseError, Var, evaluate, parse)


class TestParse:
    def test_sum(self):
        assert evaluate(parse("x+y"), 1, 2) == 3

    def test_power_right_associative(self):
        assert evaluate(parse("2^3^2"), 0, 0) == 512

    def test_sin_pi_half(self):
        assert evaluate(parse("sin(pi/2)"), 0, 0) == 1.0

    def test_trailing_operator_position(self):
        with pytest.raises(ParseError) as exc:
            parse("x+")
        assert exc.value.position == 2

    def test_empty(self):
        with pytest.raises(ParseError):
            parse("   ")

    def test_unknown_identifier(self):
        with pytest.raises(ParseError, match="unknown identifier"):
            parse("foo")

    def test_unknown_call_arity(self):
        with pytest.raises(ParseError):
            parse("sin(x, y)")
        with pytest.raises(ParseError):
            parse("min(x)")

    def test_scientific_literals(self):
        assert evaluate(parse("1e-3"), 0, 0) == 1e-3
        assert evaluate(parse("2.5E+2"), 0, 0) == 250.0

    def test_precedence(self):
        assert evaluate(parse("1+2*3"), 0, 0) == 7
        assert evaluate(parse("-2^2"), 0, 0) == -4  # unary binds looser than ^

    def test_whitespace_insignificant(self):
        assert evaluate(parse(" x *  ( y+ 1 ) "), 2, 3) == 8


class TestEvaluate:
    def test_constant_fold_like(self):
        assert evaluate(parse("1+0*x"), 5, 7) == 1

    def test_log_domain_error(self):
        with pytest.raises(DomainError):
            evaluate(parse("log(x)"), 0, 0)

    def test_affine(self):
        assert evaluate(parse("x*y - y"), 3, 2) == 4

    def test_sqrt_negative(self):
        with pytest.raises(DomainError):
            evaluate(parse("sqrt(x)"), -1, 0)

    def test_division_by_zero(self):
        with pytest.raises(DomainError):
            evaluate(parse("1/x"), 0, 0)

    def test_bad_power(self):
        with pytest.raises(DomainError):
            evaluate(parse("(-1)^0.5"), 0, 0)

    def test_overflow_reported(self):
        with pytest.raises(DomainError):
            evaluate(parse("exp(x)"), 1e9, 0)

    def test_min_max(self):
        assert evaluate(parse("min(x, y)"), 3, -2) == -2
        assert evaluate(parse("max(x, y)"), 3, -2) == 3

    def test_callable_protocol(self):
        e = parse("x - 2*y")
        assert e(10, 3) == 4


# -- random-tree generation for the round-trip property ---------------------

_leaf = st.one_of(
    st.floats(min_value=0.1, max_value=5.0).map(Num),
    st.sampled_from(["x", "y"]).map(Var),
)


def _branch(children):
    return st.one_of(
        st.tuples(st.sampled_from("+-*"), children, children).map(
            lambda t: BinOp(t[0], t[1], t[2])),
        children.map(Neg),
        st.tuples(st.sampled_from(["sin", "cos", "abs"]), children).map(
            lambda t: Call(t[0], (t[1],))),
        st.tuples(st.sampled_from(["min", "max"]), children, children).map(
            lambda t: Call(t[0], (t[1], t[2]))),
    )


_tree = st.recursive(_leaf, _branch, max_leaves=20)


@settings(max_examples=200, deadline=None)
@given(tree=_tree, x=st.floats(-3, 3), y=st.floats(-3, 3))
def test_roundtrip_print_parse(tree, x, y):
    """Pretty-print then re-parse yields an evaluation-equivalent tree."""
    reparsed = parse(str(tree))
    a = evaluate(tree, x, y)
    b = evaluate(reparsed, x, y)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(tree=_tree, x=st.floats(-3, 3), y=st.floats(-3, 3))
def test_parenthesization_invariant(tree, x, y):
    s = str(tree)
    assert evaluate(parse("(" + s + ")"), x, y) == evaluate(parse(s), x, y)
