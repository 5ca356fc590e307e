import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diracmap.dsl import (Binary, Call, DSLError, Dual, ExprDomainError, ExprSyntaxError, Literal,
                          NonDifferentiableError, Param, UnboundParameterError, Unary,
                          UnbalancedParenthesisError, UnknownFunctionError, Variable, compile_conformal_factor,
                          evaluate, evaluate_with_derivative, parse_expression, to_source)
from diracmap.errors import PositivityError
from diracmap.metric import effective_potential, wormhole_conformal_factor

from _fuzz import random_expression

WORMHOLE_EXPR = "sqrt(x^2/(x^2+b0^2))"


class TestParse:
    def test_wormhole_tree(self):
        x2 = Binary("^", Variable(), Literal(2.0))
        b2 = Binary("^", Param("b0"), Literal(2.0))
        expected = Call("sqrt", Binary("/", x2, Binary("+", x2, b2)))
        assert parse_expression(WORMHOLE_EXPR) == expected

    def test_literal(self):
        assert parse_expression("1") == Literal(1.0)

    @pytest.mark.parametrize("src,value", [("2.5e-3", 2.5e-3), ("1E+2", 100.0), (".5", 0.5), ("3.", 3.0)])
    def test_number_forms(self, src, value):
        assert parse_expression(src) == Literal(value)

    def test_open_call_reports_offset(self):
        with pytest.raises(ExprSyntaxError) as info:
            parse_expression("sqrt(")
        assert info.value.span[0] == 5
        assert "expected expression" in str(info.value)

    def test_unbalanced(self):
        with pytest.raises(UnbalancedParenthesisError):
            parse_expression("(1+2")
        with pytest.raises(UnbalancedParenthesisError):
            parse_expression("1+2)")

    def test_unknown_function(self):
        with pytest.raises(UnknownFunctionError) as info:
            parse_expression("1 + cosh(x)")
        assert info.value.span == (4, 8)

    @pytest.mark.parametrize("src", ["", "1 +", "* 2", "x x", "2^", "sqrt", "1e", "$", "é"])
    def test_syntax_errors(self, src):
        with pytest.raises(ExprSyntaxError):
            parse_expression(src)

    def test_whitespace_insensitive(self):
        assert parse_expression(" sqrt ( x ^ 2 ) ") == parse_expression("sqrt(x^2)")

    def test_spans_are_byte_offsets(self):
        node = parse_expression("  b0 * x")
        assert node.span == (2, 8)
        assert node.left.span == (2, 4)

    def test_deep_nesting_is_a_structured_error(self):
        with pytest.raises(ExprSyntaxError):
            parse_expression("(" * 5000 + "x" + ")" * 5000)
        with pytest.raises(ExprSyntaxError):
            parse_expression("-" * 5000 + "x")


class TestPrecedence:
    def test_mixed(self):
        assert evaluate(parse_expression("2+3*4^2"), 0.0) == 50.0

    def test_unary_minus_looser_than_power(self):
        assert evaluate(parse_expression("-x^2"), 3.0) == -9.0

    def test_unary_minus_tighter_than_product(self):
        assert parse_expression("-x*2") == Binary("*", Unary("-", Variable()), Literal(2.0))

    def test_power_right_associative(self):
        assert evaluate(parse_expression("2^3^2"), 0.0) == 512.0

    def test_negative_exponent(self):
        assert evaluate(parse_expression("2^-1"), 0.0) == 0.5

    def test_left_associative_division(self):
        assert evaluate(parse_expression("8/4/2"), 0.0) == 1.0


class TestEvaluate:
    def test_polynomial(self):
        assert evaluate(parse_expression("x^2+1"), 3.0) == 10.0

    def test_wormhole_expression(self):
        assert evaluate(parse_expression(WORMHOLE_EXPR), 10.0, {"b0": 10.0}) == pytest.approx(
            1 / math.sqrt(2), abs=1e-15)

    @pytest.mark.parametrize("src,x", [("log(x)", -1.0), ("log(x)", 0.0), ("sqrt(x)", -0.5),
                                       ("1/x", 0.0), ("x^0.5", -2.0), ("x^-1", 0.0), ("exp(x)", 1000.0)])
    def test_domain_errors(self, src, x):
        with pytest.raises(ExprDomainError) as info:
            evaluate(parse_expression(src), x)
        assert info.value.span is not None

    def test_domain_error_points_at_subexpression(self):
        src = "1 + log(x - 5)"
        with pytest.raises(ExprDomainError) as info:
            evaluate(parse_expression(src), 1.0)
        start, end = info.value.span
        assert src.encode()[start:end] == b"log(x - 5)"

    def test_unbound(self):
        with pytest.raises(UnboundParameterError):
            evaluate(parse_expression("a*x"), 1.0)

    def test_negative_base_integer_power(self):
        assert evaluate(parse_expression("x^3"), -2.0) == -8.0

    def test_vectorised(self):
        x = np.linspace(-1, 1, 5)
        np.testing.assert_allclose(evaluate(parse_expression("x^2"), x), x**2)
        np.testing.assert_allclose(evaluate(parse_expression("3"), x), 3.0)

    @pytest.mark.parametrize("func", ["sqrt", "exp", "log", "sin", "cos", "tan", "tanh", "abs"])
    def test_function_table(self, func):
        x = 0.7
        assert evaluate(parse_expression(f"{func}(x)"), x) == pytest.approx(getattr(math, func if func != "abs" else "fabs")(x), rel=1e-15)


class TestDerivative:
    def test_power_rule(self):
        assert evaluate_with_derivative(parse_expression("x^2"), 3.0) == (9.0, 6.0)

    def test_tanh_at_zero(self):
        assert evaluate_with_derivative(parse_expression("tanh(x)"), 0.0) == (0.0, 1.0)

    def test_wormhole_against_finite_difference(self):
        ast = parse_expression(WORMHOLE_EXPR)
        p = {"b0": 10.0}
        h = 1e-5
        fd = (evaluate(ast, 10.0 + h, p) - evaluate(ast, 10.0 - h, p)) / (2 * h)
        assert abs(evaluate_with_derivative(ast, 10.0, p)[1] - fd) <= 1e-8

    def test_abs_at_zero(self):
        with pytest.raises(NonDifferentiableError):
            evaluate_with_derivative(parse_expression("abs(x)"), 0.0)
        assert evaluate(parse_expression("abs(x)"), 0.0) == 0.0

    def test_abs_of_constant_at_zero_is_fine(self):
        assert evaluate_with_derivative(parse_expression("abs(x - x)"), 0.0) == (0.0, 0.0)

    def test_variable_exponent(self):
        v, d = evaluate_with_derivative(parse_expression("2^x"), 3.0)
        assert v == 8.0
        assert d == pytest.approx(8.0 * math.log(2.0), rel=1e-15)

    def test_variable_exponent_negative_base(self):
        with pytest.raises(DSLError):
            evaluate_with_derivative(parse_expression("(0-2)^x"), 2.0)

    @pytest.mark.parametrize("func,deriv", [
        ("sqrt", lambda u: 0.5 / math.sqrt(u)),
        ("exp", math.exp),
        ("log", lambda u: 1 / u),
        ("sin", math.cos),
        ("cos", lambda u: -math.sin(u)),
        ("tan", lambda u: 1 / math.cos(u) ** 2),
        ("tanh", lambda u: 1 - math.tanh(u) ** 2),
        ("abs", lambda u: math.copysign(1.0, u)),
    ])
    def test_chain_rule_per_function(self, func, deriv):
        # d/dx f(x^2 + 0.3) = f'(x^2 + 0.3) * 2x
        ast = parse_expression(f"{func}(x^2 + 0.3)")
        for x in (-0.9, 0.4, 1.1):
            u = x * x + 0.3
            assert evaluate_with_derivative(ast, x)[1] == pytest.approx(deriv(u) * 2 * x, rel=1e-12, abs=1e-15)

    def test_dual_arithmetic(self):
        a = Dual(2.0, 1.0)
        r = (3.0 - a) / a * 2.0 + 1.0
        assert r.value == pytest.approx(2.0)
        assert r.deriv == pytest.approx(-1.5)
        assert (2.0 ** Dual(1.0, 1.0)).deriv == pytest.approx(2 * math.log(2))


class TestCompile:
    def test_matches_builtin_wormhole(self, rng):
        cf = compile_conformal_factor(WORMHOLE_EXPR, {"b0": 10.0}, [0.0])
        ref = wormhole_conformal_factor(10.0)
        x = rng.uniform(0.1, 100, 100) * rng.choice([-1, 1], 100)
        np.testing.assert_allclose(cf.omega(x), ref.omega(x), rtol=1e-12, atol=0)
        np.testing.assert_allclose(cf.omega_prime(x), ref.omega_prime(x), rtol=1e-12, atol=0)
        assert cf.singular_points == (0.0,)

    def test_flat(self):
        cf = compile_conformal_factor("1")
        assert effective_potential(cf, np.linspace(-5, 5, 11)).tolist() == [0j] * 11

    def test_positivity_failure(self):
        with pytest.raises(PositivityError):
            compile_conformal_factor("x", singular_points=[], domain=(-1.0, 1.0))

    def test_unbound_at_compile(self):
        with pytest.raises(UnboundParameterError):
            compile_conformal_factor("a + x^2")

    def test_declared_singular_point_is_skipped(self):
        cf = compile_conformal_factor("abs(x)/(1+abs(x))", singular_points=[0.0], domain=(-1.0, 1.0), samples=257)
        assert cf.omega(0.5) == pytest.approx(1 / 3)


# --- properties -------------------------------------------------------------------

_literals = st.floats(min_value=0.0, max_value=1e6, allow_nan=False, allow_infinity=False).map(Literal)
_leaves = st.one_of(_literals, st.just(Variable()), st.sampled_from(["a", "b0", "k_2"]).map(Param))


def _extend(children):
    return st.one_of(
        st.builds(Unary, st.sampled_from(["-", "+"]), children),
        st.builds(Binary, st.sampled_from(["+", "-", "*", "/", "^"]), children, children),
        st.builds(Call, st.sampled_from(["sqrt", "exp", "log", "sin", "cos", "tan", "tanh", "abs"]), children),
    )


def _depth(node):
    if isinstance(node, Unary):
        return 1 + _depth(node.operand)
    if isinstance(node, Binary):
        return 1 + max(_depth(node.left), _depth(node.right))
    if isinstance(node, Call):
        return 1 + _depth(node.arg)
    return 0


asts = st.recursive(_leaves, _extend, max_leaves=24).filter(lambda n: _depth(n) <= 6)


@settings(max_examples=100, deadline=None)
@given(asts)
def test_pretty_print_round_trip(node):
    assert parse_expression(to_source(node)) == node


@settings(max_examples=300, deadline=None)
@given(st.one_of(st.binary(max_size=64), st.text(max_size=64),
                 st.text(alphabet="x0123456789.eE+-*/^() sqrtlogexpabcn", max_size=40)))
def test_parser_never_aborts(data):
    try:
        node = parse_expression(data)
    except DSLError:
        return
    assert isinstance(node, (Literal, Variable, Param, Unary, Binary, Call))


def test_dual_derivative_matches_finite_difference(rng):
    h = 1e-6
    worst = 0.0
    for _ in range(50):
        ast = parse_expression(random_expression(rng))
        xs = rng.uniform(-2.0, 2.0, 100)
        _, d = evaluate_with_derivative(ast, xs)
        fd = (evaluate(ast, xs + h) - evaluate(ast, xs - h)) / (2 * h)
        rel = np.abs(d - fd) / np.maximum(np.abs(d), 1.0)
        worst = max(worst, float(rel.max()))
    assert worst <= 1e-6
