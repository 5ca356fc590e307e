"""A small expression language for user-defined conformal factors.

Grammar (whitespace insensitive)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | "+" unary | power
    power   := primary ("^" unary)?          # right associative
    primary := NUMBER | "x" | IDENT | FUNC "(" expr ")" | "(" expr ")"

``x`` is the position variable, any other identifier is a named parameter
bound at evaluation time.  Derivatives with respect to ``x`` come from
forward-mode dual numbers.  Evaluation is vectorised: ``x`` may be a numpy
array, and a domain violation at any element raises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from diracmap.errors import DiracMapError, PositivityError
from diracmap.metric import ConformalFactor

MAX_DEPTH = 100

FUNCTIONS = ("sqrt", "exp", "log", "sin", "cos", "tan", "tanh", "abs")

Span = Tuple[int, int]


class DSLError(DiracMapError, ValueError):
    tag = "expr"
    code = 2

    def __init__(self, message, span: Optional[Span] = None):
        self.span = span
        self.message = message
        where = f" at offset {span[0]}" if span is not None else ""
        super().__init__(f"{message}{where}")


class ExprSyntaxError(DSLError):
    tag = "parse"


class UnbalancedParenthesisError(ExprSyntaxError):
    pass


class UnknownFunctionError(ExprSyntaxError):
    pass


class EvaluationError(DSLError):
    tag = "eval"
    code = 3


class UnboundParameterError(EvaluationError):
    tag = "unbound-parameter"
    code = 2


class ExprDomainError(EvaluationError):
    tag = "expr-domain"


class NonDifferentiableError(EvaluationError):
    tag = "non-differentiable"


# --- AST -----------------------------------------------------------------

@dataclass(frozen=True)
class Literal:
    value: float
    span: Span = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Variable:
    span: Span = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Param:
    name: str
    span: Span = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Node"
    span: Span = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"
    span: Span = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"
    span: Span = field(default=(0, 0), compare=False)


Node = Union[Literal, Variable, Param, Unary, Binary, Call]


def to_source(node: Node) -> str:
    """Render ``node`` as fully parenthesised source that re-parses to the same tree."""
    if isinstance(node, Literal):
        return repr(float(node.value))
    if isinstance(node, Variable):
        return "x"
    if isinstance(node, Param):
        return node.name
    if isinstance(node, Unary):
        return f"({node.op}{to_source(node.operand)})"
    if isinstance(node, Binary):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def parameters(node: Node) -> set:
    """Names of all parameters referenced by ``node``."""
    if isinstance(node, Param):
        return {node.name}
    if isinstance(node, Unary):
        return parameters(node.operand)
    if isinstance(node, Binary):
        return parameters(node.left) | parameters(node.right)
    if isinstance(node, Call):
        return parameters(node.arg)
    return set()


# --- tokenizer / parser ----------------------------------------------------

_OPS = b"+-*/^()"


def _tokenize(data: bytes):
    toks = []
    i, n = 0, len(data)
    while i < n:
        c = data[i]
        if c in b" \t\r\n":
            i += 1
        elif c in _OPS:
            toks.append((chr(c), chr(c), (i, i + 1)))
            i += 1
        elif 48 <= c <= 57 or c == 46:  # digit or '.'
            j = i
            while j < n and 48 <= data[j] <= 57:
                j += 1
            if j < n and data[j] == 46:
                j += 1
                while j < n and 48 <= data[j] <= 57:
                    j += 1
            if data[i:j] == b".":
                raise ExprSyntaxError("malformed number", (i, j))
            if j < n and data[j] in b"eE":
                k = j + 1
                if k < n and data[k] in b"+-":
                    k += 1
                if k < n and 48 <= data[k] <= 57:
                    while k < n and 48 <= data[k] <= 57:
                        k += 1
                    j = k
                else:
                    raise ExprSyntaxError("malformed exponent in number", (i, k))
            toks.append(("num", float(data[i:j]), (i, j)))
            i = j
        elif c == 95 or 65 <= c <= 90 or 97 <= c <= 122:
            j = i + 1
            while j < n and (data[j] == 95 or 65 <= data[j] <= 90 or 97 <= data[j] <= 122 or 48 <= data[j] <= 57):
                j += 1
            toks.append(("ident", data[i:j].decode("ascii"), (i, j)))
            i = j
        else:
            raise ExprSyntaxError(f"unexpected character {data[i:i + 1]!r}", (i, i + 1))
    toks.append(("eof", None, (n, n)))
    return toks


class _Parser:
    def __init__(self, data: bytes):
        self.toks = _tokenize(data)
        self.pos = 0
        self.depth = 0

    def peek(self):
        return self.toks[self.pos]

    def advance(self):
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def parse(self) -> Node:
        node = self.expr()
        kind, _, span = self.peek()
        if kind == ")":
            raise UnbalancedParenthesisError("unmatched ')'", span)
        if kind != "eof":
            raise ExprSyntaxError("expected operator or end of input", span)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            right = self.term()
            node = Binary(op, node, right, (node.span[0], right.span[1]))
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            right = self.unary()
            node = Binary(op, node, right, (node.span[0], right.span[1]))
        return node

    def unary(self) -> Node:
        kind, _, span = self.peek()
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ExprSyntaxError(f"expression nested deeper than {MAX_DEPTH} levels", span)
        try:
            if kind in ("-", "+"):
                self.advance()
                operand = self.unary()
                return Unary(kind, operand, (span[0], operand.span[1]))
            return self.power()
        finally:
            self.depth -= 1

    def power(self) -> Node:
        base = self.primary()
        if self.peek()[0] == "^":
            self.advance()
            exponent = self.unary()
            return Binary("^", base, exponent, (base.span[0], exponent.span[1]))
        return base

    def _close(self, open_span):
        kind, _, span = self.peek()
        if kind == ")":
            return self.advance()[2]
        if kind == "eof":
            raise UnbalancedParenthesisError(f"missing ')' for '(' opened at byte {open_span[0]}", span)
        raise ExprSyntaxError("expected ')'", span)

    def primary(self) -> Node:
        kind, value, span = self.advance()
        if kind == "num":
            return Literal(value, span)
        if kind == "ident":
            if self.peek()[0] == "(":
                if value not in FUNCTIONS:
                    raise UnknownFunctionError(f"unknown function {value!r}", span)
                open_span = self.advance()[2]
                arg = self.expr()
                end = self._close(open_span)
                return Call(value, arg, (span[0], end[1]))
            if value in FUNCTIONS:
                raise ExprSyntaxError(f"function {value!r} requires an argument list", span)
            if value == "x":
                return Variable(span)
            return Param(value, span)
        if kind == "(":
            inner = self.expr()
            end = self._close(span)
            return _respan(inner, (span[0], end[1]))
        if kind == ")":
            raise UnbalancedParenthesisError("unmatched ')'", span)
        raise ExprSyntaxError("expected expression", span)


def _respan(node: Node, span: Span) -> Node:
    return type(node)(**{**node.__dict__, "span": span})


def parse_expression(source: Union[str, bytes]) -> Node:
    """Parse ``source`` into an AST.  Spans are byte offsets into the UTF-8 encoding."""
    data = source.encode("utf-8", errors="surrogatepass") if isinstance(source, str) else bytes(source)
    return _Parser(data).parse()


# --- dual numbers ------------------------------------------------------------

class Dual:
    """value + deriv * eps with eps**2 = 0; components may be numpy arrays."""

    __slots__ = ("value", "deriv")

    def __init__(self, value, deriv=0.0):
        self.value = value
        self.deriv = deriv

    def __repr__(self):
        return f"Dual({self.value!r}, {self.deriv!r})"

    @staticmethod
    def lift(other):
        return other if isinstance(other, Dual) else Dual(other, 0.0)

    def __add__(self, other):
        o = Dual.lift(other)
        return Dual(self.value + o.value, self.deriv + o.deriv)

    __radd__ = __add__

    def __sub__(self, other):
        o = Dual.lift(other)
        return Dual(self.value - o.value, self.deriv - o.deriv)

    def __rsub__(self, other):
        return Dual.lift(other) - self

    def __neg__(self):
        return Dual(-self.value, -self.deriv)

    def __mul__(self, other):
        o = Dual.lift(other)
        return Dual(self.value * o.value, self.deriv * o.value + self.value * o.deriv)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Dual.lift(other)
        q = self.value / o.value
        return Dual(q, (self.deriv - q * o.deriv) / o.value)

    def __rtruediv__(self, other):
        return Dual.lift(other) / self

    def __pow__(self, other):
        o = Dual.lift(other)
        return dual_pow(self, o)

    def __rpow__(self, other):
        return dual_pow(Dual.lift(other), self)


def dual_pow(a: Dual, b: Dual) -> Dual:
    if np.all(np.asarray(b.deriv) == 0):
        # constant exponent: power rule, valid for negative bases with integer exponents
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.power(a.value, b.value)
            d = b.value * np.power(a.value, b.value - 1.0) * a.deriv
        d = np.where(np.asarray(a.deriv) == 0, 0.0, d)
        return Dual(val, d)
    val = np.power(a.value, b.value)
    return Dual(val, val * (b.deriv * np.log(a.value) + b.value * a.deriv / a.value))


def _dual_apply(func, u: Dual) -> Dual:
    v = u.value
    if func == "sqrt":
        r = np.sqrt(v)
        return Dual(r, 0.5 * u.deriv / r)
    if func == "exp":
        r = np.exp(v)
        return Dual(r, r * u.deriv)
    if func == "log":
        return Dual(np.log(v), u.deriv / v)
    if func == "sin":
        return Dual(np.sin(v), np.cos(v) * u.deriv)
    if func == "cos":
        return Dual(np.cos(v), -np.sin(v) * u.deriv)
    if func == "tan":
        c = np.cos(v)
        return Dual(np.tan(v), u.deriv / (c * c))
    if func == "tanh":
        r = np.tanh(v)
        return Dual(r, (1.0 - r * r) * u.deriv)
    if func == "abs":
        return Dual(np.abs(v), np.sign(v) * u.deriv)
    raise UnknownFunctionError(f"unknown function {func!r}")


# --- evaluation ---------------------------------------------------------------

_REAL_FUNCS = {
    "sqrt": np.sqrt,
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "tanh": np.tanh,
    "abs": np.abs,
}


def _finite(value, node, what):
    if not np.all(np.isfinite(value)):
        raise ExprDomainError(f"{what} in '{to_source(node)}' is not finite", node.span)
    return value


class _Evaluator:
    def __init__(self, x, params: Mapping[str, float], derivative: bool):
        self.x = x
        self.params = params
        self.derivative = derivative

    def const(self, c):
        return Dual(c, 0.0) if self.derivative else c

    def val(self, u):
        return u.value if self.derivative else u

    def check(self, result, node):
        if self.derivative:
            _finite(result.value, node, "value")
            if not np.all(np.isfinite(result.deriv)):
                raise NonDifferentiableError(f"derivative of '{to_source(node)}' is not finite", node.span)
        else:
            _finite(result, node, "value")
        return result

    def __call__(self, node: Node):
        if isinstance(node, Literal):
            return self.const(float(node.value))
        if isinstance(node, Variable):
            if self.derivative:
                return Dual(self.x, np.ones_like(self.x))
            return self.x
        if isinstance(node, Param):
            if node.name not in self.params:
                raise UnboundParameterError(f"parameter {node.name!r} is not bound", node.span)
            return self.const(float(self.params[node.name]))
        if isinstance(node, Unary):
            u = self(node.operand)
            return -u if node.op == "-" else u
        if isinstance(node, Binary):
            return self.binary(node)
        if isinstance(node, Call):
            return self.call(node)
        raise TypeError(f"not an expression node: {node!r}")

    def binary(self, node: Binary):
        a = self(node.left)
        b = self(node.right)
        op = node.op
        with np.errstate(all="ignore"):
            if op == "+":
                res = a + b
            elif op == "-":
                res = a - b
            elif op == "*":
                res = a * b
            elif op == "/":
                if np.any(np.asarray(self.val(b)) == 0):
                    raise ExprDomainError(f"division by zero in '{to_source(node)}'", node.span)
                res = a / b
            else:
                res = self.power(a, b, node)
        return self.check(res, node)

    def power(self, a, b, node):
        base = np.asarray(self.val(a))
        expo = np.asarray(self.val(b))
        integral = expo == np.round(expo)
        if np.any((base < 0) & ~integral):
            raise ExprDomainError(f"negative base with non-integer exponent in '{to_source(node)}'", node.span)
        if np.any((base == 0) & (expo < 0)):
            raise ExprDomainError(f"zero raised to a negative power in '{to_source(node)}'", node.span)
        if self.derivative:
            if not np.all(np.asarray(b.deriv) == 0) and np.any(base <= 0):
                raise NonDifferentiableError(
                    f"variable exponent requires a positive base in '{to_source(node)}'", node.span
                )
            return dual_pow(a, b)
        return np.power(base, expo)

    def call(self, node: Call):
        u = self(node.arg)
        v = np.asarray(self.val(u))
        f = node.func
        if f == "sqrt" and np.any(v < 0):
            raise ExprDomainError(f"sqrt of a negative value in '{to_source(node)}'", node.span)
        if f == "log" and np.any(v <= 0):
            raise ExprDomainError(f"log of a non-positive value in '{to_source(node)}'", node.span)
        if self.derivative:
            if f == "abs" and np.any((v == 0) & (np.asarray(u.deriv) != 0)):
                raise NonDifferentiableError(f"abs is not differentiable at 0 in '{to_source(node)}'", node.span)
            if f == "sqrt" and np.any((v == 0) & (np.asarray(u.deriv) != 0)):
                raise NonDifferentiableError(f"sqrt is not differentiable at 0 in '{to_source(node)}'", node.span)
            with np.errstate(all="ignore"):
                res = _dual_apply(f, u)
        else:
            with np.errstate(all="ignore"):
                res = _REAL_FUNCS[f](v)
        return self.check(res, node)


def _as_scalar(v):
    return float(v) if np.ndim(v) == 0 else v


def _broadcast(result, x):
    return np.broadcast_to(result, np.shape(x)).astype(float) if np.ndim(x) else result


def evaluate(ast: Node, x, params: Optional[Mapping[str, float]] = None):
    """Evaluate ``ast`` at ``x`` (scalar or array)."""
    xa = np.asarray(x, dtype=float)
    out = _Evaluator(xa, params or {}, derivative=False)(ast)
    return _as_scalar(_broadcast(np.asarray(out, dtype=float), xa))


def evaluate_with_derivative(ast: Node, x, params: Optional[Mapping[str, float]] = None):
    """Return ``(f(x), f'(x))`` using dual-number propagation."""
    xa = np.asarray(x, dtype=float)
    out = _Evaluator(xa, params or {}, derivative=True)(ast)
    value = _broadcast(np.asarray(out.value, dtype=float), xa)
    deriv = _broadcast(np.asarray(out.deriv, dtype=float), xa)
    return _as_scalar(value), _as_scalar(deriv)


def compile_conformal_factor(
    source: str,
    params: Optional[Mapping[str, float]] = None,
    singular_points: Sequence[float] = (),
    domain: Tuple[float, float] = (-100.0, 100.0),
    samples: int = 256,
    label: Optional[str] = None,
) -> ConformalFactor:
    """Build a :class:`ConformalFactor` from an expression for Omega(x).

    Omega is sampled at ``samples`` evenly spaced points of ``domain`` and
    rejected if any sample away from the declared singular points is <= 0.
    """
    params = dict(params or {})
    ast = parse_expression(source)
    missing = parameters(ast) - set(params)
    if missing:
        raise UnboundParameterError(f"unbound parameter(s): {', '.join(sorted(missing))}")

    def omega(x):
        return evaluate(ast, x, params)

    def omega_prime(x):
        return evaluate_with_derivative(ast, x, params)[1]

    scale = max([1.0] + [abs(v) for v in params.values()])
    cf = ConformalFactor(
        omega=omega,
        omega_prime=omega_prime,
        singular_points=tuple(sorted(singular_points)),
        label=label or source,
        length_scale=scale,
    )
    lo, hi = domain
    xs = np.linspace(lo, hi, samples)
    xs = xs[~cf.singular_mask(xs)]
    for xi in xs:
        try:
            w = omega(float(xi))
        except EvaluationError as exc:
            raise PositivityError(f"Omega cannot be evaluated at sample x={xi:.17g}: {exc}") from exc
        if not w > 0:
            raise PositivityError(f"Omega({xi:.17g}) = {w:.17g} is not positive")
    return cf
