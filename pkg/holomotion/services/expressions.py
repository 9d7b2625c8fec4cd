"""Rational expressions in the motion parameter (and, for algebraic strands, in z).

Grammar: literals (``2``, ``0.5``, ``1e-3``, ``3j``), the imaginary unit ``i``, the
parameter ``lam`` (or ``λ``), the fibre variable ``z`` where allowed, the operators
``+ - * / ^`` (``**`` is accepted for ``^``), integer powers and parentheses. Juxtaposition
means multiplication (``2lam``, ``(lam - 1)(lam + 1)``).

Text is scanned token by token first so every syntax error carries its position; the
accepted token stream is then handed to sympy, which owns the expression tree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Tuple

import numpy as np
import sympy
from sympy.parsing.sympy_parser import parse_expr, rationalize, standard_transformations

from holomotion.errors import InputError

LAM = sympy.Symbol("lam")
Z = sympy.Symbol("z")

_TOKEN = re.compile(
    r"(?P<space>\s+)"
    r"|(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?j?)"
    r"|(?P<name>[A-Za-z_λ][A-Za-z0-9_λ]*)"
    r"|(?P<op>\*\*|[-+*/^()])"
)
_PARAMETER_NAMES = {"lam", "λ"}
_UNIT_NAMES = {"i", "I"}
_TRANSFORMATIONS = standard_transformations + (rationalize,)


class ExpressionSyntaxError(InputError):
    """Expression text outside the grammar; ``position`` is a 0-based column."""

    def __init__(self, text: str, position: int, message: str):
        self.text, self.position, self.message = text, position, message
        super().__init__(f"{message} at column {position + 1}: {text!r}")


def _tokenize(text: str, allow_z: bool) -> List[Tuple[str, str, int]]:
    tokens = []
    position = 0
    while position < len(text):
        match = _TOKEN.match(text, position)
        if not match:
            raise ExpressionSyntaxError(text, position, f"Unexpected character {text[position]!r}")
        kind = match.lastgroup
        value = match.group()
        if kind == "name":
            allowed = _PARAMETER_NAMES | _UNIT_NAMES | ({"z"} if allow_z else set())
            if value not in allowed:
                raise ExpressionSyntaxError(text, position, f"Unknown name {value!r}")
        if kind != "space":
            tokens.append((kind, value, position))
        position = match.end()
    return tokens


def _to_source(text: str, tokens: List[Tuple[str, str, int]]) -> str:
    """Checks operand/operator alternation and emits python source for sympy."""
    pieces: List[str] = []
    expect_operand = True
    depth_stack: List[int] = []
    for kind, value, position in tokens:
        is_operand = kind in ("number", "name") or value == "("
        if is_operand:
            if not expect_operand:
                pieces.append("*")  # juxtaposition
            if value == "(":
                depth_stack.append(position)
                pieces.append("(")
                expect_operand = True
                continue
            if kind == "name":
                value = "lam" if value in _PARAMETER_NAMES else value
                value = "I" if value in _UNIT_NAMES else value
            pieces.append(value)
            expect_operand = False
            continue

        if value == ")":
            if expect_operand or not depth_stack:
                raise ExpressionSyntaxError(text, position, "Unexpected ')'")
            depth_stack.pop()
            pieces.append(")")
            expect_operand = False
            continue

        # binary or unary operator
        if expect_operand:
            if value in ("+", "-"):
                pieces.append(value)
                continue
            raise ExpressionSyntaxError(text, position, f"Operator {value!r} lacks a left operand")
        pieces.append("**" if value in ("^", "**") else value)
        expect_operand = True

    if depth_stack:
        raise ExpressionSyntaxError(text, depth_stack[-1], "Unclosed '('")
    if expect_operand:
        raise ExpressionSyntaxError(text, len(text), "Expression ends early")
    return " ".join(pieces)


def _check_integer_powers(text: str, expr: sympy.Expr) -> None:
    for power in expr.atoms(sympy.Pow):
        if power.exp.free_symbols or not power.exp.is_integer:
            position = max(text.find("^"), text.find("**"), 0)
            raise ExpressionSyntaxError(text, position, "Only integer powers are allowed")


@dataclass(frozen=True)
class Expression:
    """A rational expression with a numpy evaluator."""

    expr: sympy.Expr
    source: str = field(default="", compare=False)

    @cached_property
    def _evaluator(self):
        return sympy.lambdify(LAM, self.expr, modules="numpy")

    @property
    def is_constant(self) -> bool:
        return LAM not in self.expr.free_symbols

    def __call__(self, lam):
        """Evaluates at a complex scalar or array; poles give non-finite values."""
        points = np.asarray(lam, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            values = np.asarray(self._evaluator(points), dtype=complex)
        values = np.broadcast_to(values, points.shape).copy()
        if values.ndim == 0:
            return complex(values)
        return values

    def compose(self, inner: "Expression") -> "Expression":
        """Returns self(inner(lam))."""
        return Expression(sympy.together(self.expr.subs(LAM, inner.expr)))

    def text(self) -> str:
        """Round-trippable text in the motion file grammar."""
        return self.source or sympy.sstr(self.expr)

    def numerator_roots(self) -> np.ndarray:
        numerator, _ = sympy.fraction(sympy.together(self.expr))
        return _polynomial_roots(numerator)

    def pole_roots(self) -> np.ndarray:
        _, denominator = sympy.fraction(sympy.together(self.expr))
        return _polynomial_roots(denominator)


def _polynomial_roots(polynomial: sympy.Expr) -> np.ndarray:
    poly = sympy.Poly(sympy.expand(polynomial), LAM)
    coefficients = np.array([complex(c) for c in poly.all_coeffs()], dtype=complex)
    if coefficients.size <= 1:
        return np.zeros(0, dtype=complex)
    return np.roots(coefficients)


def parse_expression(text: str, allow_z: bool = False) -> sympy.Expr:
    """Parses grammar text into a sympy expression, raising with a column on failure."""
    if not text or not text.strip():
        raise ExpressionSyntaxError(text or "", 0, "Empty expression")
    tokens = _tokenize(text, allow_z)
    source = _to_source(text, tokens)
    try:
        expr = parse_expr(
            source,
            local_dict={"lam": LAM, "z": Z, "I": sympy.I},
            transformations=_TRANSFORMATIONS,
            evaluate=True,
        )
    except (SyntaxError, TypeError, ValueError, sympy.SympifyError) as e:
        raise ExpressionSyntaxError(text, 0, f"Could not parse expression ({e})")
    if expr.has(sympy.zoo, sympy.nan, sympy.oo):
        raise ExpressionSyntaxError(text, 0, "Expression is undefined (division by zero)")
    _check_integer_powers(text, expr)
    symbols = {LAM, Z} if allow_z else {LAM}
    if not expr.free_symbols <= symbols or not expr.is_rational_function(*symbols):
        raise ExpressionSyntaxError(text, 0, "Not a rational expression")
    return expr


def parse_rational(text: str) -> Expression:
    return Expression(parse_expression(text), source=text.strip())


def parse_constant(text: str) -> complex:
    """Parses a constant such as ``1/2`` or ``0.3 - 0.2i`` into a complex number."""
    expr = parse_expression(text)
    if expr.free_symbols:
        raise ExpressionSyntaxError(text, 0, "Expected a constant")
    return complex(expr)


def _number(value: complex) -> sympy.Expr:
    value = complex(value)
    real, imag = (
        sympy.Integer(int(part)) if float(part).is_integer() else sympy.Float(part)
        for part in (value.real, value.imag)
    )
    return real + imag * sympy.I


def format_complex(value: complex) -> str:
    """Exact text for a complex double in the expression grammar, e.g. ``(0.5 - 0.25i)``."""
    value = complex(value)
    if value.imag == 0:
        return f"({value.real!r})"
    sign = "-" if value.imag < 0 else "+"
    return f"({value.real!r} {sign} {abs(value.imag)!r}i)"


def constant_expression(value: complex) -> Expression:
    return Expression(_number(value), source=format_complex(value))


def polynomial_expression(
    constant: complex, coefficients: np.ndarray, center: complex, scale: float
) -> Expression:
    """constant + sum_k coefficients[k-1] * ((lam - center) / scale) ** k."""
    u = (LAM - _number(center)) / _number(scale)
    expr = _number(constant)
    pieces = [format_complex(constant)]
    for k, c in enumerate(coefficients, start=1):
        if c != 0:
            expr = expr + _number(c) * u**k
            pieces.append(f"{format_complex(c)}((lam - {format_complex(center)}) / {float(scale)!r})^{k}")
    return Expression(expr, source=" + ".join(pieces))
