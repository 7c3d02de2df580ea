"""Truncated-Taylor (jet) arithmetic and a small scalar-field expression language.

A :class:`Jet` stores the value of a smooth function at a point together with
its normalized Taylor coefficients ``coeffs[alpha] = d^alpha f(p) / alpha!``
for every multi-index ``alpha`` with ``|alpha| <= order``.  Sums, products,
quotients and compositions with elementary functions propagate these
coefficients exactly (no truncation error below the jet order), which is what
makes fourth-order curvature expressions computable without finite-difference
noise.

Scalar fields (metric entries, structure entries, vector-field components)
are written in a conventional infix grammar, parsed once into an AST
(:class:`ScalarFieldExpr`) and evaluated into jets at arbitrary points.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import product as _iterproduct
from typing import Iterable, Mapping, Sequence

import numpy as np

MAX_ORDER = 4

__all__ = [
    "MAX_ORDER",
    "Jet",
    "JetSpace",
    "jet_space",
    "ScalarFieldExpr",
    "parse_expr",
    "eval_jet",
    "eval_value",
    "ExprError",
    "ExprSyntaxError",
    "UndeclaredSymbolError",
    "EvalDomainError",
    "jet_exp",
    "jet_ln",
    "jet_sin",
    "jet_cos",
    "jet_tan",
    "jet_sinh",
    "jet_cosh",
    "jet_sech",
    "jet_sqrt",
]


# ---------------------------------------------------------------------------
# Multi-index bookkeeping
# ---------------------------------------------------------------------------

class JetSpace:
    """Shared tables for all jets of a fixed (dim, order).

    Multi-indices are stored densely in graded lexicographic order (sorted by
    total degree, ties broken by tuple comparison), so truncation to a lower
    order is a prefix slice.  The multiplication table lists every coefficient
    triple (i, j, k) with exponents[i] + exponents[j] = exponents[k].
    """

    __slots__ = ("dim", "order", "exponents", "index", "size",
                 "_mul_ii", "_mul_jj", "_mul_kk", "_trunc_sizes",
                 "_deriv_src", "_deriv_dst", "_alpha_factorials")

    def __init__(self, dim: int, order: int):
        if dim < 1:
            raise ValueError(f"jet dimension must be >= 1, got {dim}")
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"jet order must be in 0..{MAX_ORDER}, got {order}")
        self.dim = dim
        self.order = order
        exps = [e for e in _iterproduct(range(order + 1), repeat=dim) if sum(e) <= order]
        exps.sort(key=lambda e: (sum(e), e))
        self.exponents = tuple(exps)
        self.index = {e: i for i, e in enumerate(exps)}
        self.size = len(exps)
        # degree-d block ends: prefix length per truncation order
        self._trunc_sizes = tuple(
            sum(1 for e in exps if sum(e) <= k) for k in range(order + 1)
        )
        ii, jj, kk = [], [], []
        for i, a in enumerate(exps):
            da = sum(a)
            for j, b in enumerate(exps):
                if da + sum(b) > order:
                    continue
                c = tuple(x + y for x, y in zip(a, b))
                ii.append(i)
                jj.append(j)
                kk.append(self.index[c])
        self._mul_ii = np.asarray(ii, dtype=np.intp)
        self._mul_jj = np.asarray(jj, dtype=np.intp)
        self._mul_kk = np.asarray(kk, dtype=np.intp)
        # derivative maps per variable: d/dx_v sends coeff at alpha+e_v to
        # (alpha_v + 1) * coeff, landing at alpha in the order-1 space
        src, dst = [], []
        for v in range(dim):
            s, d = [], []
            for i, a in enumerate(exps):
                if a[v] == 0:
                    continue
                tgt = list(a)
                tgt[v] -= 1
                s.append(i)
                d.append(self.index[tuple(tgt)])
            src.append(np.asarray(s, dtype=np.intp))
            dst.append(np.asarray(d, dtype=np.intp))
        self._deriv_src = tuple(src)
        self._deriv_dst = tuple(dst)
        self._alpha_factorials = np.asarray(
            [math.prod(math.factorial(x) for x in e) for e in exps], dtype=float
        )

    def trunc_size(self, order: int) -> int:
        return self._trunc_sizes[order]


@lru_cache(maxsize=None)
def jet_space(dim: int, order: int) -> JetSpace:
    return JetSpace(dim, order)


# ---------------------------------------------------------------------------
# Jets
# ---------------------------------------------------------------------------

class Jet:
    """A truncated multivariate Taylor expansion at a point."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space: JetSpace, coeffs: np.ndarray):
        self.space = space
        self.coeffs = coeffs

    # -- constructors -------------------------------------------------------

    @staticmethod
    def constant(space: JetSpace, value: float) -> "Jet":
        c = np.zeros(space.size)
        c[0] = value
        return Jet(space, c)

    @staticmethod
    def variable(space: JetSpace, i: int, value: float) -> "Jet":
        """The coordinate function x_i expanded at x_i = value."""
        c = np.zeros(space.size)
        c[0] = value
        if space.order >= 1:
            e = tuple(1 if k == i else 0 for k in range(space.dim))
            c[space.index[e]] = 1.0
        return Jet(space, c)

    # -- basic queries -------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def order(self) -> int:
        return self.space.order

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def is_zero(self) -> bool:
        return not self.coeffs.any()

    def coefficient(self, alpha: Sequence[int]) -> float:
        """Normalized Taylor coefficient d^alpha f / alpha!."""
        return float(self.coeffs[self.space.index[tuple(alpha)]])

    def partial(self, alpha: Sequence[int]) -> float:
        """The plain partial derivative d^alpha f (coefficient times alpha!)."""
        i = self.space.index[tuple(alpha)]
        return float(self.coeffs[i] * self.space._alpha_factorials[i])

    def derivatives_1d(self) -> np.ndarray:
        """For dim-1 jets: the array [f, f', f'', ...] up to the jet order."""
        if self.dim != 1:
            raise ValueError("derivatives_1d is only defined for univariate jets")
        return self.coeffs * self.space._alpha_factorials

    def tolist(self) -> list:
        """Flat coefficient list in graded-lex multi-index order."""
        return self.coeffs.tolist()

    def __repr__(self) -> str:
        return f"Jet(dim={self.dim}, order={self.order}, value={self.value!r})"

    # -- structure -----------------------------------------------------------

    def truncate(self, order: int) -> "Jet":
        if order == self.order:
            return self
        if order > self.order:
            raise ValueError(f"cannot extend an order-{self.order} jet to order {order}")
        sp = jet_space(self.dim, order)
        return Jet(sp, self.coeffs[: sp.size].copy())

    def derivative(self, v: int) -> "Jet":
        """d/dx_v as a jet of one lower order."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        sp = jet_space(self.dim, self.order - 1)
        out = np.zeros(sp.size)
        src = self.space._deriv_src[v]
        dst = self.space._deriv_dst[v]
        exps = self.space.exponents
        vals = self.coeffs[src] * np.asarray([exps[s][v] for s in src], dtype=float)
        keep = dst < sp.size
        np.add.at(out, dst[keep], vals[keep])
        return Jet(sp, out)

    # -- arithmetic ----------------------------------------------------------

    def _align(self, other: "Jet") -> tuple["Jet", "Jet"]:
        if self.dim != other.dim:
            raise ValueError("jet dimensions differ")
        if self.order == other.order:
            return self, other
        k = min(self.order, other.order)
        return self.truncate(k), other.truncate(k)

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            return Jet(a.space, a.coeffs + b.coeffs)
        c = self.coeffs.copy()
        c[0] += other
        return Jet(self.space, c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.coeffs)

    def __sub__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            return Jet(a.space, a.coeffs - b.coeffs)
        c = self.coeffs.copy()
        c[0] -= other
        return Jet(self.space, c)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            sp = a.space
            prod = a.coeffs[sp._mul_ii] * b.coeffs[sp._mul_jj]
            return Jet(sp, np.bincount(sp._mul_kk, weights=prod, minlength=sp.size))
        return Jet(self.space, self.coeffs * other)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        v = self.value
        if v == 0.0:
            raise EvalDomainError("division by zero")
        series = [(-1.0) ** k / v ** (k + 1) for k in range(self.order + 1)]
        return self.compose_series(series)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            return a * b.reciprocal()
        return Jet(self.space, self.coeffs / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, exponent):
        if isinstance(exponent, Jet):
            raise EvalDomainError("variable exponents are not supported; write exp(y*ln(x))")
        if float(exponent) == int(exponent):
            n = int(exponent)
            if n < 0:
                return (self.__pow__(-n)).reciprocal()
            out = Jet.constant(self.space, 1.0)
            base = self
            while n:
                if n & 1:
                    out = out * base
                base = base * base if n > 1 else base
                n >>= 1
            return out
        v = self.value
        if v <= 0.0:
            raise EvalDomainError(
                f"non-integer power of a non-positive base (base value {v})"
            )
        a = float(exponent)
        series, c = [], 1.0
        for k in range(self.order + 1):
            series.append(c * v ** (a - k))
            c *= (a - k) / (k + 1)
        return self.compose_series(series)

    def compose_series(self, series: Sequence[float]) -> "Jet":
        """Compose with a univariate analytic map given its Taylor coefficients.

        ``series[k]`` is the coefficient of (u - u0)^k where u0 is this jet's
        value; composition is exact at the jet order because (u - u0) has no
        constant term.
        """
        du = Jet(self.space, self.coeffs.copy())
        du.coeffs[0] = 0.0
        out = Jet.constant(self.space, series[self.order])
        for k in range(self.order - 1, -1, -1):
            out = out * du
            out.coeffs[0] += series[k]
        return out


# ---------------------------------------------------------------------------
# Elementary functions on jets (or floats)
# ---------------------------------------------------------------------------

def _series_exp(v, order):
    e = math.exp(v)
    return [e / math.factorial(k) for k in range(order + 1)]


def _series_ln(v, order):
    if v <= 0.0:
        raise EvalDomainError(f"ln of a non-positive value ({v})")
    s = [math.log(v)]
    for k in range(1, order + 1):
        s.append((-1.0) ** (k + 1) / (k * v ** k))
    return s


def _series_sin(v, order):
    cyc = [math.sin(v), math.cos(v), -math.sin(v), -math.cos(v)]
    return [cyc[k % 4] / math.factorial(k) for k in range(order + 1)]


def _series_cos(v, order):
    cyc = [math.cos(v), -math.sin(v), -math.cos(v), math.sin(v)]
    return [cyc[k % 4] / math.factorial(k) for k in range(order + 1)]


def _series_sinh(v, order):
    cyc = [math.sinh(v), math.cosh(v)]
    return [cyc[k % 2] / math.factorial(k) for k in range(order + 1)]


def _series_cosh(v, order):
    cyc = [math.cosh(v), math.sinh(v)]
    return [cyc[k % 2] / math.factorial(k) for k in range(order + 1)]


def jet_exp(x):
    return x.compose_series(_series_exp(x.value, x.order)) if isinstance(x, Jet) else math.exp(x)


def jet_ln(x):
    if isinstance(x, Jet):
        return x.compose_series(_series_ln(x.value, x.order))
    if x <= 0.0:
        raise EvalDomainError(f"ln of a non-positive value ({x})")
    return math.log(x)


def jet_sin(x):
    return x.compose_series(_series_sin(x.value, x.order)) if isinstance(x, Jet) else math.sin(x)


def jet_cos(x):
    return x.compose_series(_series_cos(x.value, x.order)) if isinstance(x, Jet) else math.cos(x)


def jet_sinh(x):
    return x.compose_series(_series_sinh(x.value, x.order)) if isinstance(x, Jet) else math.sinh(x)


def jet_cosh(x):
    return x.compose_series(_series_cosh(x.value, x.order)) if isinstance(x, Jet) else math.cosh(x)


def jet_tan(x):
    if isinstance(x, Jet):
        return jet_sin(x) / jet_cos(x)
    return math.tan(x)


def jet_sech(x):
    if isinstance(x, Jet):
        return jet_cosh(x).reciprocal()
    return 1.0 / math.cosh(x)


def jet_sqrt(x):
    if isinstance(x, Jet):
        return x ** 0.5
    if x <= 0.0:
        raise EvalDomainError(f"sqrt of a non-positive value ({x})")
    return math.sqrt(x)


_FUNCTIONS = {
    "exp": jet_exp,
    "ln": jet_ln,
    "sin": jet_sin,
    "cos": jet_cos,
    "tan": jet_tan,
    "sinh": jet_sinh,
    "cosh": jet_cosh,
    "sech": jet_sech,
    "sqrt": jet_sqrt,
}

_CONSTANTS = {"pi": math.pi}


# ---------------------------------------------------------------------------
# Expression language
# ---------------------------------------------------------------------------

class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, source: str, offset: int):
        self.offset = len(source[:offset].encode("utf-8"))
        super().__init__(f"syntax error at offset {self.offset}: {message}")


class UndeclaredSymbolError(ExprError):
    def __init__(self, name: str, source: str, offset: int):
        self.symbol = name
        self.offset = len(source[:offset].encode("utf-8"))
        super().__init__(f"undeclared symbol '{name}' at offset {self.offset}")


class EvalDomainError(ExprError):
    pass


# AST nodes: plain tuples keep the tree lightweight and hashable.
#   ("num", value)
#   ("coord", index, name)
#   ("param", name)
#   ("neg", a)
#   ("+", a, b) / ("-", a, b) / ("*", a, b) / ("/", a, b)
#   ("pow", base, exponent_ast)   exponent_ast contains no coordinates
#   ("call", fname, a)

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+(?:[eE][+-]?\d+)?)|(?P<name>[^\W\d]\w*)|(?P<op>[-+*/^()]))",
    re.UNICODE,
)


def _tokenize(source: str):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            off = len(source) - len(stripped)
            raise ExprSyntaxError(f"unexpected character {source[off]!r}", source, off)
        if m.lastgroup == "num":
            tokens.append(("num", float(m.group("num")), m.start("num")))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", None, len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, coords: Sequence[str], params: Sequence[str]):
        self.source = source
        self.coords = {name: i for i, name in enumerate(coords)}
        self.params = set(params)
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, val, off = self.next()
        if kind != "op" or val != op:
            raise ExprSyntaxError(f"expected '{op}'", self.source, off)

    def parse(self):
        ast = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected trailing input {val!r}", self.source, off)
        return ast

    def expr(self):
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.next()
                rhs = self.term()
                node = (val, node, rhs)
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.next()
                rhs = self.unary()
                node = (val, node, rhs)
            else:
                return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.next()
            return ("neg", self.unary())
        if kind == "op" and val == "+":
            self.next()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, off = self.peek()
        if kind == "op" and val == "^":
            self.next()
            exponent = self.unary()  # right-associative: a^b^c = a^(b^c)
            if _contains_coord(exponent):
                raise ExprSyntaxError(
                    "exponent must be constant; write exp(y*ln(x)) for variable powers",
                    self.source, off,
                )
            return ("pow", base, exponent)
        return base

    def atom(self):
        kind, val, off = self.next()
        if kind == "num":
            return ("num", val)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "name":
            nkind, nval, _ = self.peek()
            if nkind == "op" and nval == "(":
                if val not in _FUNCTIONS:
                    raise UndeclaredSymbolError(val, self.source, off)
                self.next()
                arg = self.expr()
                self.expect_op(")")
                return ("call", val, arg)
            if val in self.coords:
                return ("coord", self.coords[val], val)
            if val in self.params:
                return ("param", val)
            if val in _CONSTANTS:
                return ("num", _CONSTANTS[val])
            raise UndeclaredSymbolError(val, self.source, off)
        raise ExprSyntaxError("expected a value", self.source, off)


def _contains_coord(ast) -> bool:
    tag = ast[0]
    if tag == "coord":
        return True
    if tag in ("num", "param"):
        return False
    if tag == "neg":
        return _contains_coord(ast[1])
    if tag == "call":
        return _contains_coord(ast[2])
    if tag == "pow":
        return _contains_coord(ast[1]) or _contains_coord(ast[2])
    return _contains_coord(ast[1]) or _contains_coord(ast[2])


@dataclass(frozen=True)
class ScalarFieldExpr:
    """A parsed scalar field over named coordinates and constant parameters."""

    ast: tuple
    coords: tuple
    params: tuple
    source: str

    def __add__(self, other):
        return _combine(self, other, "+")

    def __sub__(self, other):
        return _combine(self, other, "-")

    def __mul__(self, other):
        return _combine(self, other, "*")

    def __rmul__(self, other):
        return _combine(self, other, "*", reflected=True)

    def __neg__(self):
        return ScalarFieldExpr(("neg", self.ast), self.coords, self.params,
                               f"-({self.source})")


def _combine(a: ScalarFieldExpr, b, op: str, reflected: bool = False) -> ScalarFieldExpr:
    if isinstance(b, (int, float)):
        b = ScalarFieldExpr(("num", float(b)), a.coords, a.params, repr(float(b)))
    if a.coords != b.coords:
        raise ExprError("cannot combine expressions over different coordinates")
    params = tuple(dict.fromkeys(a.params + b.params))
    lhs, rhs = (b, a) if reflected else (a, b)
    return ScalarFieldExpr((op, lhs.ast, rhs.ast), a.coords, params,
                           f"({lhs.source}) {op} ({rhs.source})")


def parse_expr(source: str, coords: Sequence[str], params: Sequence[str] = ()) -> ScalarFieldExpr:
    """Parse an infix expression over the declared coordinate and parameter names.

    Raises :class:`ExprSyntaxError` (with byte offset) on malformed input and
    :class:`UndeclaredSymbolError` for unknown symbols.
    """
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", source, 0)
    parser = _Parser(source, coords, params)
    return ScalarFieldExpr(parser.parse(), tuple(coords), tuple(params), source)


def _eval_ast(ast, env, param_env, source):
    tag = ast[0]
    if tag == "num":
        return ast[1]
    if tag == "coord":
        return env[ast[1]]
    if tag == "param":
        try:
            return param_env[ast[1]]
        except KeyError:
            raise EvalDomainError(f"parameter '{ast[1]}' has no bound value") from None
    if tag == "neg":
        return -_eval_ast(ast[1], env, param_env, source)
    if tag == "call":
        arg = _eval_ast(ast[2], env, param_env, source)
        try:
            return _FUNCTIONS[ast[1]](arg)
        except EvalDomainError as err:
            raise EvalDomainError(f"{err.args[0]} in '{ast[1]}(...)' of '{source}'") from None
    if tag == "pow":
        base = _eval_ast(ast[1], env, param_env, source)
        exponent = _eval_ast(ast[2], env, {} if param_env is None else param_env, source)
        if isinstance(exponent, Jet):
            exponent = exponent.value
        try:
            if isinstance(base, Jet):
                return base ** exponent
            if float(exponent) != int(exponent) and base <= 0.0:
                raise EvalDomainError(
                    f"non-integer power of a non-positive base (base value {base})")
            return base ** exponent
        except EvalDomainError as err:
            raise EvalDomainError(f"{err.args[0]} in '^' of '{source}'") from None
    a = _eval_ast(ast[1], env, param_env, source)
    b = _eval_ast(ast[2], env, param_env, source)
    if tag == "+":
        return a + b
    if tag == "-":
        return a - b
    if tag == "*":
        return a * b
    if tag == "/":
        try:
            if isinstance(b, Jet):
                return a * b.reciprocal()
            if b == 0.0:
                raise EvalDomainError("division by zero")
            return a / b
        except EvalDomainError as err:
            raise EvalDomainError(f"{err.args[0]} in '/' of '{source}'") from None
    raise AssertionError(f"unknown AST tag {tag!r}")


def eval_jet(f: ScalarFieldExpr, p: Sequence[float], order: int,
             params: Mapping[str, float] | None = None) -> Jet:
    """Evaluate the exact order-``order`` jet of ``f`` at the point ``p``."""
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"jet order must be in 0..{MAX_ORDER}, got {order}")
    dim = len(f.coords)
    if len(p) != dim:
        raise ValueError(f"point has {len(p)} components, expression has {dim} coordinates")
    sp = jet_space(dim, order)
    env = [Jet.variable(sp, i, float(p[i])) for i in range(dim)]
    out = _eval_ast(f.ast, env, dict(params or {}), f.source)
    if isinstance(out, Jet):
        return out
    return Jet.constant(sp, float(out))


def eval_value(f: ScalarFieldExpr, p: Sequence[float],
               params: Mapping[str, float] | None = None) -> float:
    """Fast value-only evaluation (no derivative data)."""
    env = [float(x) for x in p]
    return float(_eval_ast(f.ast, env, dict(params or {}), f.source))


def parse_fields(sources: Iterable[str], coords: Sequence[str],
                 params: Sequence[str] = ()) -> tuple[ScalarFieldExpr, ...]:
    return tuple(parse_expr(s, coords, params) for s in sources)
