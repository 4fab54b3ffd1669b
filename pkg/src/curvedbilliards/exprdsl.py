"""Arithmetic expressions in two variables: parsing, evaluation, exact derivatives.

The conformal factor of a metric chart is written as a plain text formula in
``x`` and ``y`` (e.g. ``"ln(2/(1 - (x^2 + y^2)))"``).  This module turns such
text into a small immutable AST, evaluates it, and differentiates it
symbolically.  The node set is closed under differentiation, so second partials
are obtained by differentiating twice.

Grammar (EBNF, also documented in the README):

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = "-" , unary | power ;
    power   = atom , [ "^" , unary ] ;        (* exponent must be constant *)
    atom    = number | "x" | "y" | func , "(" , expr , ")" | "(" , expr , ")" ;
    func    = "exp" | "ln" | "sin" | "cos" | "sqrt" | "tanh" | "atanh" ;

Precedence: ``^`` binds tighter than unary minus, which binds tighter than
``*``/``/``, which bind tighter than ``+``/``-``.  Binary operators are left
associative.  Exponents are folded to constants at parse time; a variable in
an exponent is rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

__all__ = [
    "Const",
    "Var",
    "Unary",
    "Binary",
    "Expr",
    "ExprError",
    "ExprSyntaxError",
    "ExprNameError",
    "ExprDomainError",
    "parse_expr",
    "evaluate",
    "differentiate",
    "to_source",
    "compile_fn",
]


class ExprError(Exception):
    """Base class for expression DSL errors."""


class ExprSyntaxError(ExprError):
    """Malformed input; ``offset`` is the byte offset of the offending token."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class ExprNameError(ExprError):
    """Unknown identifier; ``offset`` is the byte offset of the identifier."""

    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r} (at offset {offset})")
        self.name = name
        self.offset = offset


class ExprDomainError(ExprError):
    """Evaluation left the real domain (ln of non-positive, division by zero, ...).

    Carries the offending sub-expression so callers near a chart boundary can
    report what blew up and back off instead of crashing.
    """

    def __init__(self, node: "Expr", message: str):
        super().__init__(f"{message} in {to_source(node)}")
        self.node = node


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # "x" or "y"


@dataclass(frozen=True)
class Unary:
    op: str  # neg, exp, ln, sin, cos, sqrt, tanh, atanh
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # add, sub, mul, div, pow (pow: right side is always Const)
    left: "Expr"
    right: "Expr"


Expr = Union[Const, Var, Unary, Binary]

_FUNCTIONS = ("exp", "ln", "sin", "cos", "sqrt", "tanh", "atanh")
_VARIABLES = ("x", "y")


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_OPERATORS = "+-*/^()"


def _tokenize(src: str):
    """Yield (kind, text, offset) triples; kinds: num, name, op, end."""
    tokens = []
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c in _OPERATORS:
            tokens.append(("op", c, i))
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            while j < n and (src[j].isdigit() or src[j] == "."):
                j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            text = src[i:j]
            try:
                float(text)
            except ValueError:
                raise ExprSyntaxError(f"bad number {text!r}", i) from None
            tokens.append(("num", text, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(("name", src[i:j], i))
            i = j
            continue
        raise ExprSyntaxError(f"unexpected character {c!r}", i)
    tokens.append(("end", "", n))
    return tokens


# ---------------------------------------------------------------------------
# Parser (recursive descent)
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, text, off = self.peek()
        if kind != "op" or text != op:
            raise ExprSyntaxError(f"expected {op!r}", off)
        return self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", off)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                rhs = self.term()
                node = Binary("add" if text == "+" else "sub", node, rhs)
            else:
                return node

    def term(self) -> Expr:
        node = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                rhs = self.unary()
                node = Binary("mul" if text == "*" else "div", node, rhs)
            else:
                return node

    def unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Unary("neg", self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, text, off = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            exponent = self.unary()
            if _has_variable(exponent):
                raise ExprSyntaxError("exponent must be constant", off)
            try:
                c = evaluate(exponent, 0.0, 0.0)
            except ExprDomainError:
                raise ExprSyntaxError("exponent must be a finite constant", off) from None
            return Binary("pow", base, Const(c))
        return base

    def atom(self) -> Expr:
        kind, text, off = self.advance()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if text in _VARIABLES:
                return Var(text)
            if text in _FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Unary(text, arg)
            raise ExprNameError(text, off)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExprSyntaxError(f"unexpected {text!r}" if text else "unexpected end of input", off)


def _has_variable(node: Expr) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, Unary):
        return _has_variable(node.arg)
    if isinstance(node, Binary):
        return _has_variable(node.left) or _has_variable(node.right)
    return False


def parse_expr(src: str) -> Expr:
    """Parse ``src`` into an AST.

    Raises :class:`ExprSyntaxError` or :class:`ExprNameError` with the byte
    offset of the problem.
    """
    return _Parser(src).parse()


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def evaluate(node: Expr, x: float, y: float) -> float:
    """Evaluate ``node`` at the chart point ``(x, y)``.

    Raises :class:`ExprDomainError` when the value leaves the real domain.
    """
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return x if node.name == "x" else y
    if isinstance(node, Unary):
        v = evaluate(node.arg, x, y)
        op = node.op
        if op == "neg":
            return -v
        if op == "exp":
            try:
                return math.exp(v)
            except OverflowError:
                raise ExprDomainError(node, "overflow") from None
        if op == "ln":
            if v <= 0.0:
                raise ExprDomainError(node, f"ln of non-positive value {v!r}")
            return math.log(v)
        if op == "sin":
            return math.sin(v)
        if op == "cos":
            return math.cos(v)
        if op == "sqrt":
            if v < 0.0:
                raise ExprDomainError(node, f"sqrt of negative value {v!r}")
            return math.sqrt(v)
        if op == "tanh":
            return math.tanh(v)
        if op == "atanh":
            if abs(v) >= 1.0:
                raise ExprDomainError(node, f"atanh of value {v!r} outside (-1, 1)")
            return math.atanh(v)
        raise ValueError(f"unknown unary op {op!r}")
    if isinstance(node, Binary):
        a = evaluate(node.left, x, y)
        op = node.op
        if op == "pow":
            c = node.right.value  # type: ignore[union-attr]
            try:
                r = math.pow(a, c)
            except (ValueError, OverflowError):
                raise ExprDomainError(node, f"pow({a!r}, {c!r}) undefined") from None
            if not math.isfinite(r):
                raise ExprDomainError(node, f"pow({a!r}, {c!r}) not finite")
            return r
        b = evaluate(node.right, x, y)
        if op == "add":
            return a + b
        if op == "sub":
            return a - b
        if op == "mul":
            return a * b
        if op == "div":
            if b == 0.0:
                raise ExprDomainError(node, "division by zero")
            return a / b
        raise ValueError(f"unknown binary op {op!r}")
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------


def differentiate(node: Expr, var: str) -> Expr:
    """Exact symbolic partial derivative with respect to ``var`` ("x" or "y")."""
    if var not in _VARIABLES:
        raise ValueError(f"var must be one of {_VARIABLES}, got {var!r}")
    if isinstance(node, Const):
        return Const(0.0)
    if isinstance(node, Var):
        return Const(1.0 if node.name == var else 0.0)
    if isinstance(node, Unary):
        u = node.arg
        du = differentiate(u, var)
        op = node.op
        if op == "neg":
            return Unary("neg", du)
        if op == "exp":
            return Binary("mul", Unary("exp", u), du)
        if op == "ln":
            return Binary("div", du, u)
        if op == "sin":
            return Binary("mul", Unary("cos", u), du)
        if op == "cos":
            return Unary("neg", Binary("mul", Unary("sin", u), du))
        if op == "sqrt":
            return Binary("div", du, Binary("mul", Const(2.0), Unary("sqrt", u)))
        if op == "tanh":
            # (1 - tanh(u)^2) * du
            return Binary(
                "mul",
                Binary("sub", Const(1.0), Binary("pow", Unary("tanh", u), Const(2.0))),
                du,
            )
        if op == "atanh":
            return Binary("div", du, Binary("sub", Const(1.0), Binary("pow", u, Const(2.0))))
        raise ValueError(f"unknown unary op {op!r}")
    if isinstance(node, Binary):
        op = node.op
        a, b = node.left, node.right
        if op == "add":
            return Binary("add", differentiate(a, var), differentiate(b, var))
        if op == "sub":
            return Binary("sub", differentiate(a, var), differentiate(b, var))
        if op == "mul":
            return Binary(
                "add",
                Binary("mul", differentiate(a, var), b),
                Binary("mul", a, differentiate(b, var)),
            )
        if op == "div":
            num = Binary(
                "sub",
                Binary("mul", differentiate(a, var), b),
                Binary("mul", a, differentiate(b, var)),
            )
            return Binary("div", num, Binary("pow", b, Const(2.0)))
        if op == "pow":
            c = b.value  # type: ignore[union-attr]
            # c * a^(c-1) * da
            return Binary(
                "mul",
                Binary("mul", Const(c), Binary("pow", a, Const(c - 1.0))),
                differentiate(a, var),
            )
        raise ValueError(f"unknown binary op {op!r}")
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# Printing and compilation
# ---------------------------------------------------------------------------

_PRECEDENCE = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def to_source(node: Expr) -> str:
    """Render the AST back to grammar-conformant text (parse round-trips)."""
    out, _ = _render(node)
    return out


def _render(node: Expr):
    if isinstance(node, Const):
        v = node.value
        if v < 0 or (v == 0 and math.copysign(1.0, v) < 0):
            return f"-{_fmt_number(-v)}", _PRECEDENCE["neg"]
        return _fmt_number(v), 5
    if isinstance(node, Var):
        return node.name, 5
    if isinstance(node, Unary):
        inner, prec = _render(node.arg)
        if node.op == "neg":
            if prec <= _PRECEDENCE["neg"]:
                inner = f"({inner})"
            return f"-{inner}", _PRECEDENCE["neg"]
        return f"{node.op}({inner})", 5
    if isinstance(node, Binary):
        op = node.op
        my = _PRECEDENCE[op]
        ls, lp = _render(node.left)
        if lp < my:
            ls = f"({ls})"
        if op == "pow":
            # exponent is a constant; parenthesise negatives
            c = node.right.value  # type: ignore[union-attr]
            rs = _fmt_number(c) if c >= 0 else f"(-{_fmt_number(-c)})"
            if lp <= my:  # pow binds tightest; guard bases like -x or x^2
                ls = f"({ls})"
            return f"{ls}^{rs}", my
        rs, rp = _render(node.right)
        if rp <= my:  # left associativity: parenthesise right child at equal precedence
            rs = f"({rs})"
        sym = {"add": " + ", "sub": " - ", "mul": "*", "div": "/"}[op]
        return f"{ls}{sym}{rs}", my
    raise TypeError(f"not an expression node: {node!r}")


def _fmt_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _gen(node: Expr, names: dict) -> str:
    """Generate a python expression string for compile_fn."""
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        inner = _gen(node.arg, names)
        if node.op == "neg":
            return f"(-({inner}))"
        fn = {"ln": "_log"}.get(node.op, "_" + node.op)
        return f"{fn}({inner})"
    if isinstance(node, Binary):
        if node.op == "pow":
            c = node.right.value  # type: ignore[union-attr]
            base = _gen(node.left, names)
            if c == int(c) and abs(c) <= 64:
                return f"(({base})**({int(c)}))"
            return f"_pow(({base}), {repr(c)})"
        a = _gen(node.left, names)
        b = _gen(node.right, names)
        sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[node.op]
        return f"(({a}){sym}({b}))"
    raise TypeError(f"not an expression node: {node!r}")


def compile_fn(node: Expr, vectorized: bool = False) -> Callable:
    """Compile the AST to a fast callable ``f(x, y) -> float``.

    With ``vectorized=True`` the callable uses numpy ufuncs and accepts
    arrays.  Scalar compiled functions raise the underlying math errors
    (``ValueError``, ``ZeroDivisionError``, ``OverflowError``) on domain
    violations; use :func:`evaluate` when you need the offending node.
    """
    if vectorized:
        import numpy as np

        names = {
            "_exp": np.exp, "_log": np.log, "_sin": np.sin, "_cos": np.cos,
            "_sqrt": np.sqrt, "_tanh": np.tanh, "_atanh": np.arctanh,
            "_pow": np.power,
        }
    else:
        names = {
            "_exp": math.exp, "_log": math.log, "_sin": math.sin, "_cos": math.cos,
            "_sqrt": math.sqrt, "_tanh": math.tanh, "_atanh": math.atanh,
            "_pow": math.pow,
        }
    body = _gen(node, names)
    src = f"def _f(x, y):\n    return {body}\n"
    ns = dict(names)
    exec(compile(src, "<exprdsl>", "exec"), ns)
    fn = ns["_f"]
    fn.__doc__ = to_source(node)
    return fn
