"""Closed expression algebra for real-valued functions of time.

Every time-varying coefficient in the library (system coefficients,
feedthrough functions, synthesis parameters) is a :class:`TimeFunction`:
an immutable expression tree over the time variable ``t`` built from
constants, ``sin``, ``cos``, sums, products, negation, square roots and
squares.  The algebra is closed under exact differentiation, supports a
canonical normal form with decidable structural equality, and evaluates
on scalars or numpy arrays.

A textual grammar (used by scenario files) covers the constructible
surface of the algebra::

    expr   := term (("+"|"-") term)*
    term   := factor ("*" factor)*
    factor := NUMBER | "pi" | "t" | "sin" "(" expr ")" | "cos" "(" expr ")"
            | "sqrt" "(" expr ")" | "(" expr ")" | "-" factor

A ``/`` is permitted only between two NUMBER literals (``409/32``).
"""

from __future__ import annotations

import math
import re

import numpy as np

__all__ = [
    "TimeFunction",
    "Constant",
    "TimeVar",
    "T",
    "Sin",
    "Cos",
    "Sum",
    "Product",
    "Negate",
    "Power",
    "RootQuotient",
    "DomainError",
    "ParseError",
    "evaluate",
    "differentiate",
    "normalize",
    "parse_expression",
    "render",
    "is_structurally_constant",
]


class DomainError(ValueError):
    """A square-root base was non-positive at an evaluated time."""


class ParseError(ValueError):
    """Malformed expression or scenario text.

    Carries ``line`` and ``column`` (1-based) and the set of expected
    tokens at the failure point.
    """

    def __init__(self, message, line, column, expected=()):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column
        self.expected = tuple(expected)


class TimeFunction:
    """Base class for expression-tree nodes.  Immutable and hashable."""

    __slots__ = ()

    def __add__(self, other):
        return Sum(self, _wrap(other))

    def __radd__(self, other):
        return Sum(_wrap(other), self)

    def __sub__(self, other):
        return Sum(self, Negate(_wrap(other)))

    def __rsub__(self, other):
        return Sum(_wrap(other), Negate(self))

    def __mul__(self, other):
        return Product(self, _wrap(other))

    def __rmul__(self, other):
        return Product(_wrap(other), self)

    def __neg__(self):
        return Negate(self)

    def __call__(self, t):
        return evaluate(self, t)

    def __repr__(self):
        name = type(self).__name__
        return f"{name}({', '.join(repr(c) for c in self._fields())})"

    def _fields(self):
        raise NotImplementedError

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        return self._fields() == other._fields()

    def __hash__(self):
        return hash((type(self).__name__, self._fields()))


def _wrap(value):
    if isinstance(value, TimeFunction):
        return value
    if isinstance(value, (int, float)):
        return Constant(value)
    raise TypeError(f"cannot use {value!r} as a TimeFunction")


class Constant(TimeFunction):
    __slots__ = ("value",)

    def __init__(self, value):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError("constants must be finite")
        # normalize -0.0 so structural equality and rendering are stable
        object.__setattr__(self, "value", value + 0.0 if value == 0 else value)

    def __setattr__(self, *a):
        raise AttributeError("TimeFunction nodes are immutable")

    def _fields(self):
        return (self.value,)


class TimeVar(TimeFunction):
    """The time symbol ``t`` (seconds)."""

    __slots__ = ()

    def _fields(self):
        return ()


T = TimeVar()


class _Unary(TimeFunction):
    __slots__ = ("arg",)

    def __init__(self, arg):
        object.__setattr__(self, "arg", _wrap(arg))

    def __setattr__(self, *a):
        raise AttributeError("TimeFunction nodes are immutable")

    def _fields(self):
        return (self.arg,)


class Sin(_Unary):
    __slots__ = ()


class Cos(_Unary):
    __slots__ = ()


class Negate(_Unary):
    __slots__ = ()


class _Nary(TimeFunction):
    __slots__ = ("children",)

    def __init__(self, *children):
        if not children:
            raise ValueError(f"{type(self).__name__} needs at least one child")
        object.__setattr__(self, "children", tuple(_wrap(c) for c in children))

    def __setattr__(self, *a):
        raise AttributeError("TimeFunction nodes are immutable")

    def _fields(self):
        return self.children


class Sum(_Nary):
    __slots__ = ()


class Product(_Nary):
    __slots__ = ()


_ALLOWED_EXPONENTS = (0.5, 1.0, 2.0)


class Power(TimeFunction):
    """``base ** exponent`` with exponent restricted to 0.5, 1 or 2.

    The restriction keeps differentiation closed: square roots
    differentiate into :class:`RootQuotient` nodes, squares into
    products.
    """

    __slots__ = ("base", "exponent")

    def __init__(self, base, exponent):
        exponent = float(exponent)
        if exponent not in _ALLOWED_EXPONENTS:
            raise ValueError(f"Power exponent must be one of {_ALLOWED_EXPONENTS}")
        object.__setattr__(self, "base", _wrap(base))
        object.__setattr__(self, "exponent", exponent)

    def __setattr__(self, *a):
        raise AttributeError("TimeFunction nodes are immutable")

    def _fields(self):
        return (self.base, self.exponent)


class RootQuotient(TimeFunction):
    """``numerator / base ** (half_power / 2)`` with ``base > 0``.

    The only division in the algebra.  It exists so that expressions of
    the form ``f / sqrt(g)`` (and their derivatives, which need
    ``g ** -(j+2)/2``) stay inside the algebra.  When ``base``
    normalizes to a positive constant the node folds into an ordinary
    product.
    """

    __slots__ = ("numerator", "base", "half_power")

    def __init__(self, numerator, base, half_power=1):
        half_power = int(half_power)
        if half_power < 1:
            raise ValueError("half_power must be a positive integer")
        object.__setattr__(self, "numerator", _wrap(numerator))
        object.__setattr__(self, "base", _wrap(base))
        object.__setattr__(self, "half_power", half_power)

    def __setattr__(self, *a):
        raise AttributeError("TimeFunction nodes are immutable")

    def _fields(self):
        return (self.numerator, self.base, self.half_power)


# --------------------------------------------------------------------------
# evaluation


def evaluate(f, t):
    """Evaluate ``f`` at time ``t`` (scalar or ndarray, seconds).

    Pure and deterministic.  Raises :class:`DomainError` if any square
    root sees a non-positive base at the evaluated times.
    """
    t = np.asarray(t, dtype=float)
    out = _eval(f, t)
    if t.ndim == 0:
        return float(out)
    return np.broadcast_to(out, t.shape).astype(float, copy=False)


def _eval(f, t):
    if isinstance(f, Constant):
        return f.value
    if isinstance(f, TimeVar):
        return t
    if isinstance(f, Sin):
        return np.sin(_eval(f.arg, t))
    if isinstance(f, Cos):
        return np.cos(_eval(f.arg, t))
    if isinstance(f, Negate):
        return -_eval(f.arg, t)
    if isinstance(f, Sum):
        acc = _eval(f.children[0], t)
        for c in f.children[1:]:
            acc = acc + _eval(c, t)
        return acc
    if isinstance(f, Product):
        acc = _eval(f.children[0], t)
        for c in f.children[1:]:
            acc = acc * _eval(c, t)
        return acc
    if isinstance(f, Power):
        base = _eval(f.base, t)
        if f.exponent == 1.0:
            return base
        if f.exponent == 2.0:
            return base * base
        _require_positive(base, "square-root base")
        return np.sqrt(base)
    if isinstance(f, RootQuotient):
        base = _eval(f.base, t)
        _require_positive(base, "root-quotient base")
        return _eval(f.numerator, t) * base ** (-0.5 * f.half_power)
    raise TypeError(f"not a TimeFunction node: {f!r}")


def _require_positive(values, what):
    if np.min(values) <= 0.0:
        bad = float(np.min(values))
        raise DomainError(f"{what} is non-positive (min value {bad:g})")


# --------------------------------------------------------------------------
# differentiation


def differentiate(f):
    """Exact derivative df/dt, returned in normalized form."""
    return normalize(_diff(f))


def _diff(f):
    if isinstance(f, (Constant,)):
        return Constant(0.0)
    if isinstance(f, TimeVar):
        return Constant(1.0)
    if isinstance(f, Sin):
        return Product(Cos(f.arg), _diff(f.arg))
    if isinstance(f, Cos):
        return Negate(Product(Sin(f.arg), _diff(f.arg)))
    if isinstance(f, Negate):
        return Negate(_diff(f.arg))
    if isinstance(f, Sum):
        return Sum(*[_diff(c) for c in f.children])
    if isinstance(f, Product):
        # general Leibniz rule
        terms = []
        for i in range(len(f.children)):
            factors = list(f.children)
            factors[i] = _diff(factors[i])
            terms.append(Product(*factors))
        return Sum(*terms)
    if isinstance(f, Power):
        if f.exponent == 1.0:
            return _diff(f.base)
        if f.exponent == 2.0:
            return Product(Constant(2.0), f.base, _diff(f.base))
        # d sqrt(u) = u' / (2 sqrt(u))
        return RootQuotient(Product(Constant(0.5), _diff(f.base)), f.base, 1)
    if isinstance(f, RootQuotient):
        j = f.half_power
        first = RootQuotient(_diff(f.numerator), f.base, j)
        second = RootQuotient(
            Product(Constant(0.5 * j), f.numerator, _diff(f.base)), f.base, j + 2
        )
        return Sum(first, Negate(second))
    raise TypeError(f"not a TimeFunction node: {f!r}")


# --------------------------------------------------------------------------
# normalization and structural order


def normalize(f):
    """Canonical form of ``f``.

    Constants are folded, sums and products flattened and sorted by a
    deterministic key, zero terms and unit factors removed, ``Negate``
    rewritten as multiplication by -1, exponent-1 powers unwrapped and
    squares rewritten as products, a single constant coefficient is
    distributed over a sum, and like sum terms are collected
    (c*X + d*X becomes (c+d)*X).  Evaluation is preserved at every
    valid time.  No trigonometric rewriting is performed:
    trig-identical but structurally distinct expressions stay distinct.
    """
    if isinstance(f, (Constant, TimeVar)):
        return f
    if isinstance(f, Sin):
        arg = normalize(f.arg)
        if isinstance(arg, Constant):
            return Constant(math.sin(arg.value))
        return Sin(arg)
    if isinstance(f, Cos):
        arg = normalize(f.arg)
        if isinstance(arg, Constant):
            return Constant(math.cos(arg.value))
        return Cos(arg)
    if isinstance(f, Negate):
        return normalize(Product(Constant(-1.0), f.arg))
    if isinstance(f, Power):
        if f.exponent == 1.0:
            return normalize(f.base)
        if f.exponent == 2.0:
            return normalize(Product(f.base, f.base))
        base = normalize(f.base)
        if isinstance(base, Constant) and base.value > 0.0:
            return Constant(math.sqrt(base.value))
        # non-positive constant bases are left in place: normalization is
        # total, the error belongs to evaluation
        return Power(base, 0.5)
    if isinstance(f, Sum):
        return _normalize_sum(f)
    if isinstance(f, Product):
        return _normalize_product(f)
    if isinstance(f, RootQuotient):
        num = normalize(f.numerator)
        base = normalize(f.base)
        if isinstance(num, Constant) and num.value == 0.0:
            return Constant(0.0)
        if isinstance(base, Constant) and base.value > 0.0:
            scale = base.value ** (-0.5 * f.half_power)
            return normalize(Product(Constant(scale), num))
        return RootQuotient(num, base, f.half_power)
    raise TypeError(f"not a TimeFunction node: {f!r}")


def _normalize_sum(f):
    collected = []
    const = 0.0
    for child in f.children:
        c = normalize(child)
        if isinstance(c, Sum):
            inner = c.children
        else:
            inner = (c,)
        for item in inner:
            if isinstance(item, Constant):
                const += item.value
            else:
                collected.append(item)
    terms = _merge_like_terms(collected)
    terms.sort(key=_order_key)
    if const != 0.0 or not terms:
        terms.insert(0, Constant(const))
    if len(terms) == 1:
        return terms[0]
    return Sum(*terms)


def _merge_like_terms(items):
    """Collect c*X + d*X into (c+d)*X; X identified structurally."""
    groups = {}
    for item in items:
        if isinstance(item, Product) and isinstance(item.children[0], Constant):
            coeff = item.children[0].value
            rest = item.children[1:]
            core = rest[0] if len(rest) == 1 else Product(*rest)
        else:
            coeff = 1.0
            core = item
        key = _order_key(core)
        if key in groups:
            groups[key][0] += coeff
        else:
            groups[key] = [coeff, core]
    merged = []
    for coeff, core in groups.values():
        if coeff == 0.0:
            continue
        if coeff == 1.0:
            merged.append(core)
        elif isinstance(core, Product):
            merged.append(Product(Constant(coeff), *core.children))
        else:
            merged.append(Product(Constant(coeff), core))
    return merged


def _normalize_product(f):
    factors = []
    const = 1.0
    for child in f.children:
        c = normalize(child)
        if isinstance(c, Product):
            inner = c.children
        else:
            inner = (c,)
        for item in inner:
            if isinstance(item, Constant):
                const *= item.value
            else:
                factors.append(item)
    if const == 0.0:
        return Constant(0.0)
    if not factors:
        return Constant(const)
    if const != 1.0 and len(factors) == 1 and isinstance(factors[0], Sum):
        spread = [Product(Constant(const), term) for term in factors[0].children]
        return _normalize_sum(Sum(*spread))
    factors.sort(key=_order_key)
    if const != 1.0:
        factors.insert(0, Constant(const))
    if len(factors) == 1:
        return factors[0]
    return Product(*factors)


_KIND_RANK = {
    Constant: 0,
    TimeVar: 1,
    Sin: 2,
    Cos: 3,
    Power: 4,
    RootQuotient: 5,
    Product: 6,
    Sum: 7,
    Negate: 8,
}


def _order_key(f):
    rank = _KIND_RANK[type(f)]
    if isinstance(f, Constant):
        return (rank, f.value)
    if isinstance(f, TimeVar):
        return (rank,)
    if isinstance(f, (Sin, Cos, Negate)):
        return (rank, _order_key(f.arg))
    if isinstance(f, Power):
        return (rank, _order_key(f.base), f.exponent)
    if isinstance(f, RootQuotient):
        return (rank, _order_key(f.base), f.half_power, _order_key(f.numerator))
    return (rank,) + tuple(_order_key(c) for c in f.children)


def is_structurally_constant(f):
    """True iff ``f`` normalizes to a single Constant node."""
    return isinstance(normalize(f), Constant)


# --------------------------------------------------------------------------
# expression grammar: tokenizer, parser, renderer

_TOKEN_RE = re.compile(
    r"""
    (?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/()])
  | (?P<ws>\s+)
""",
    re.VERBOSE,
)

_KEYWORDS = {"sin", "cos", "sqrt", "pi", "t"}


class _Token:
    __slots__ = ("kind", "text", "line", "column")

    def __init__(self, kind, text, line, column):
        self.kind = kind
        self.text = text
        self.line = line
        self.column = column


def _tokenize(text, start_line=1):
    tokens = []
    line = start_line
    col = 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col,
                             expected=("NUMBER", "name", "operator"))
        kind = m.lastgroup
        lexeme = m.group()
        if kind != "ws":
            if kind == "name" and lexeme not in _KEYWORDS:
                raise ParseError(
                    f"unknown name {lexeme!r}", line, col, expected=sorted(_KEYWORDS)
                )
            tokens.append(_Token(kind if kind != "name" else lexeme,
                                 lexeme, line, col))
        for ch in lexeme:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        pos = m.end()
    tokens.append(_Token("end", "", line, col))
    return tokens


class _ExprParser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected):
        tok = self.peek()
        what = repr(tok.text) if tok.kind != "end" else "end of input"
        raise ParseError(f"unexpected {what}", tok.line, tok.column, expected)

    def expect(self, kind):
        tok = self.peek()
        if tok.kind != kind and tok.text != kind:
            self.fail((kind,))
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.peek().kind != "end":
            self.fail(("+", "-", "*", "end of input"))
        return node

    def expr(self):
        node = self.term()
        while self.peek().text in ("+", "-"):
            op = self.advance()
            rhs = self.term()
            node = Sum(node, rhs if op.text == "+" else Negate(rhs))
        return node

    def term(self):
        node = self.factor()
        while self.peek().text == "*":
            self.advance()
            node = Product(node, self.factor())
        return node

    def factor(self):
        tok = self.peek()
        if tok.text == "-":
            self.advance()
            return Negate(self.factor())
        if tok.kind == "number":
            self.advance()
            value = float(tok.text)
            if self.peek().text == "/":
                self.advance()
                denom = self.peek()
                if denom.kind != "number":
                    self.fail(("NUMBER",))
                self.advance()
                d = float(denom.text)
                if d == 0.0:
                    raise ParseError("division by zero", denom.line, denom.column)
                value = value / d
            return Constant(value)
        if tok.kind == "pi":
            self.advance()
            return Constant(math.pi)
        if tok.kind == "t":
            self.advance()
            return T
        if tok.kind in ("sin", "cos", "sqrt"):
            self.advance()
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            if tok.kind == "sin":
                return Sin(arg)
            if tok.kind == "cos":
                return Cos(arg)
            return Power(arg, 0.5)
        if tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.fail(("NUMBER", "pi", "t", "sin", "cos", "sqrt", "(", "-"))


def parse_expression(text, start_line=1):
    """Parse grammar text into a TimeFunction.  Raises ParseError."""
    return _ExprParser(_tokenize(text, start_line)).parse()


def render(f):
    """Render ``f`` as grammar text; ``parse_expression`` round-trips it.

    The expression is normalized first, so the output is canonical:
    ``parse_expression(render(f))`` normalizes equal to
    ``normalize(f)``.  Root-quotient nodes with a non-constant base (a
    differentiation artifact) have no grammar form and raise
    ValueError.
    """
    return _render(normalize(f))


def _render(f):
    if isinstance(f, Constant):
        return _render_number(f.value)
    if isinstance(f, TimeVar):
        return "t"
    if isinstance(f, Sin):
        return f"sin({_render(f.arg)})"
    if isinstance(f, Cos):
        return f"cos({_render(f.arg)})"
    if isinstance(f, Power):
        return f"sqrt({_render(f.base)})"
    if isinstance(f, Product):
        return " * ".join(_render_factor(c) for c in f.children)
    if isinstance(f, Sum):
        parts = [_render(f.children[0])]
        for child in f.children[1:]:
            text, negative = _render_signed_term(child)
            parts.append(("- " if negative else "+ ") + text)
        return " ".join(parts)
    if isinstance(f, RootQuotient):
        raise ValueError(
            "expression contains a root quotient with non-constant base; "
            "it has no textual form"
        )
    raise TypeError(f"not a TimeFunction node: {f!r}")


def _render_number(value):
    if value < 0:
        return "-" + _render_number(-value)
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _render_factor(f):
    if isinstance(f, Sum):
        return f"({_render(f)})"
    return _render(f)


def _render_signed_term(f):
    """Rendered absolute value plus a sign flag, for '+'/'-' joining."""
    if isinstance(f, Constant) and f.value < 0:
        return _render_number(-f.value), True
    if isinstance(f, Product) and isinstance(f.children[0], Constant):
        coeff = f.children[0].value
        if coeff < 0:
            rest = f.children[1:]
            if coeff == -1.0:
                flipped = rest[0] if len(rest) == 1 else Product(*rest)
            else:
                flipped = Product(Constant(-coeff), *rest)
            return _render(flipped), True
    return _render(f), False
