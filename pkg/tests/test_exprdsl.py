import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvedbilliards.exprdsl import (
    Binary,
    Const,
    ExprDomainError,
    ExprNameError,
    ExprSyntaxError,
    Unary,
    Var,
    compile_fn,
    differentiate,
    evaluate,
    parse_expr,
    to_source,
)

DISK_FACTOR = "ln(2/(1 - (x^2 + y^2)))"


def test_parse_eval_disk_factor_origin():
    ast = parse_expr(DISK_FACTOR)
    assert evaluate(ast, 0.0, 0.0) == pytest.approx(math.log(2.0), abs=1e-15)


def test_parse_eval_disk_factor_offcenter():
    # ln(2 / (1 - 0.25)) = ln(8/3)
    ast = parse_expr(DISK_FACTOR)
    assert evaluate(ast, 0.5, 0.0) == pytest.approx(0.9808292530117262, abs=1e-15)


def test_second_derivative_matches_finite_difference():
    ast = parse_expr(DISK_FACTOR)
    dxx = differentiate(differentiate(ast, "x"), "x")
    val = evaluate(dxx, 0.0, 0.0)
    h = 1e-5
    fd = (
        evaluate(ast, h, 0.0) - 2.0 * evaluate(ast, 0.0, 0.0) + evaluate(ast, -h, 0.0)
    ) / h**2
    assert val == pytest.approx(2.0, abs=1e-12)
    assert val == pytest.approx(fd, abs=1e-5)


def test_syntax_error_carries_offset():
    with pytest.raises(ExprSyntaxError) as err:
        parse_expr("x^2 + * y")
    assert err.value.offset == 6
    assert "6" in str(err.value)


def test_unknown_identifier_rejected():
    with pytest.raises(ExprNameError) as err:
        parse_expr("x + foo(y)")
    assert err.value.name == "foo"
    assert err.value.offset == 4


def test_variable_exponent_rejected():
    with pytest.raises(ExprSyntaxError):
        parse_expr("x^y")
    with pytest.raises(ExprSyntaxError):
        parse_expr("2^(x + 1)")


def test_constant_exponent_folded():
    ast = parse_expr("x^(1 + 1)")
    assert isinstance(ast, Binary) and ast.op == "pow"
    assert isinstance(ast.right, Const) and ast.right.value == 2.0


def test_precedence_and_associativity():
    # pow > neg: -x^2 at x=3 is -(9), not 9
    assert evaluate(parse_expr("-x^2"), 3.0, 0.0) == -9.0
    # mul > add
    assert evaluate(parse_expr("1 + 2*3"), 0.0, 0.0) == 7.0
    # left associativity of sub and div
    assert evaluate(parse_expr("8 - 3 - 2"), 0.0, 0.0) == 3.0
    assert evaluate(parse_expr("8/4/2"), 0.0, 0.0) == 1.0


def test_domain_errors_carry_node():
    ast = parse_expr("ln(x)")
    with pytest.raises(ExprDomainError) as err:
        evaluate(ast, -1.0, 0.0)
    assert to_source(err.value.node) == "ln(x)"

    with pytest.raises(ExprDomainError):
        evaluate(parse_expr("1/(x - 1)"), 1.0, 0.0)
    with pytest.raises(ExprDomainError):
        evaluate(parse_expr("sqrt(x)"), -0.5, 0.0)
    with pytest.raises(ExprDomainError):
        evaluate(parse_expr("atanh(x)"), 1.0, 0.0)
    with pytest.raises(ExprDomainError):
        evaluate(parse_expr("x^0.5"), -2.0, 0.0)


# -- first-derivative consistency against central differences ----------------

FD_CASES = [
    DISK_FACTOR,
    "exp(x*y) - sin(x)*cos(y)",
    "sqrt(1 + x^2 + y^2)",
    "tanh(x - y) + atanh(x/4)",
    "(x + 2*y)^3/(1 + x^2)",
]


@pytest.mark.parametrize("src", FD_CASES)
def test_first_derivatives_match_finite_difference(src):
    ast = parse_expr(src)
    dx = differentiate(ast, "x")
    dy = differentiate(ast, "y")
    rng = np.random.default_rng(1234)
    pts = rng.uniform(-0.7, 0.7, size=(1000, 2))
    h = 1e-6
    for x, y in pts:
        for d, ex, ey in ((dx, h, 0.0), (dy, 0.0, h)):
            want = (evaluate(ast, x + ex, y + ey) - evaluate(ast, x - ex, y - ey)) / (2 * h)
            got = evaluate(d, x, y)
            assert abs(got - want) <= 1e-6 * (1.0 + abs(got))


# -- round-trip and compiled evaluation --------------------------------------


@pytest.mark.parametrize("src", FD_CASES)
def test_to_source_round_trip(src):
    ast = parse_expr(src)
    again = parse_expr(to_source(ast))
    rng = np.random.default_rng(99)
    for x, y in rng.uniform(-0.6, 0.6, size=(50, 2)):
        assert evaluate(again, x, y) == pytest.approx(evaluate(ast, x, y), rel=1e-14)


@pytest.mark.parametrize("src", FD_CASES)
def test_compiled_matches_interpreter(src):
    ast = parse_expr(src)
    fn = compile_fn(ast)
    vfn = compile_fn(ast, vectorized=True)
    rng = np.random.default_rng(7)
    pts = rng.uniform(-0.6, 0.6, size=(200, 2))
    vals = vfn(pts[:, 0], pts[:, 1])
    for (x, y), v in zip(pts, vals):
        ref = evaluate(ast, x, y)
        assert fn(x, y) == pytest.approx(ref, rel=1e-14, abs=1e-300)
        assert v == pytest.approx(ref, rel=1e-12, abs=1e-300)


# -- random ASTs: printing round-trips, derivatives stay in the node set -----


def _exprs(depth):
    leaf = st.one_of(
        st.floats(min_value=-4.0, max_value=4.0, allow_nan=False).map(Const),
        st.sampled_from(["x", "y"]).map(Var),
    )
    if depth == 0:
        return leaf
    sub = _exprs(depth - 1)
    return st.one_of(
        leaf,
        st.tuples(st.sampled_from(["neg", "exp", "ln", "sin", "cos", "sqrt", "tanh", "atanh"]), sub)
        .map(lambda t: Unary(*t)),
        st.tuples(st.sampled_from(["add", "sub", "mul", "div"]), sub, sub)
        .map(lambda t: Binary(*t)),
        st.tuples(sub, st.integers(min_value=-3, max_value=3))
        .map(lambda t: Binary("pow", t[0], Const(float(t[1])))),
    )


def _nodes_in_grammar(node):
    if isinstance(node, (Const, Var)):
        return True
    if isinstance(node, Unary):
        return node.op in ("neg", "exp", "ln", "sin", "cos", "sqrt", "tanh", "atanh") and _nodes_in_grammar(node.arg)
    if isinstance(node, Binary):
        if node.op == "pow" and not isinstance(node.right, Const):
            return False
        return node.op in ("add", "sub", "mul", "div", "pow") and _nodes_in_grammar(node.left) and _nodes_in_grammar(node.right)
    return False


@settings(max_examples=300, deadline=None)
@given(ast=_exprs(4), x=st.floats(-0.9, 0.9), y=st.floats(-0.9, 0.9))
def test_random_ast_round_trip_and_closure(ast, x, y):
    again = parse_expr(to_source(ast))
    try:
        ref = evaluate(ast, x, y)
    except (ExprDomainError, OverflowError):
        with pytest.raises((ExprDomainError, OverflowError)):
            evaluate(again, x, y)
        return
    got = evaluate(again, x, y)
    if math.isfinite(ref):
        assert got == pytest.approx(ref, rel=1e-12, abs=1e-12) or (got == ref)
    for var in ("x", "y"):
        assert _nodes_in_grammar(differentiate(ast, var))
