"""Expression trees for coefficient functions of ``t`` and phase functions of ``(x, v)``.

Trees are immutable.  Construction goes through small smart constructors that
fold constants and drop neutral elements; there is no further simplification,
so identities are checked numerically with :func:`expr_equal_numeric`.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from .config import SETTINGS
from .errors import DomainError, IndeterminateError, ParseError

FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt")


def _as_fraction(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot convert {value!r} to a rational")


class Expr:
    """Common operator sugar; subclasses are frozen dataclasses."""

    __array_priority__ = 100

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __str__(self):
        return unparse(self)

    def __call__(self, *args, **kwargs):
        """Evaluate.  ``e(2.0)`` binds the only free variable (or ``t``)."""
        if kwargs:
            return evaluate(self, kwargs)
        names = sorted(self.free_vars) or ["t"]
        if len(args) != len(names):
            raise TypeError(f"expected {len(names)} positional values for {names}")
        return evaluate(self, dict(zip(names, args)))

    @cached_property
    def free_vars(self):
        return frozenset(_free_vars(self))

    @cached_property
    def _fn(self):
        return _compile(self)


@dataclass(frozen=True, eq=True, repr=True)
class Const(Expr):
    value: Fraction


@dataclass(frozen=True, eq=True, repr=True)
class Var(Expr):
    name: str


@dataclass(frozen=True, eq=True, repr=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True, repr=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True, repr=True)
class Div(Expr):
    num: Expr
    den: Expr


@dataclass(frozen=True, eq=True, repr=True)
class Pow(Expr):
    base: Expr
    exponent: Fraction


@dataclass(frozen=True, eq=True, repr=True)
class Func(Expr):
    name: str
    arg: Expr


@dataclass(frozen=True, eq=True, repr=True)
class Neg(Expr):
    arg: Expr


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))
T = Var("t")
X = Var("x")
V = Var("v")


def const(value):
    return Const(_as_fraction(value))


def as_expr(value):
    if isinstance(value, Expr):
        return value
    return const(value)


def _is_const(e, value=None):
    return isinstance(e, Const) and (value is None or e.value == value)


def add(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    return Add(a, b)


def sub(a, b):
    return add(a, neg(b))


def neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def mul(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if _is_const(a, -1):
        return neg(b)
    if _is_const(b, -1):
        return neg(a)
    return Mul(a, b)


def div(a, b):
    if _is_const(b, 0):
        raise DomainError("division by the constant zero")
    if _is_const(a) and _is_const(b):
        return Const(a.value / b.value)
    if _is_const(a, 0):
        return ZERO
    if _is_const(b, 1):
        return a
    return Div(a, b)


def power(base, exponent):
    exponent = _as_fraction(exponent)
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const) and exponent.denominator == 1:
        if base.value == 0 and exponent < 0:
            raise DomainError("zero raised to a negative power")
        return Const(base.value ** int(exponent))
    if _is_const(base, 1):
        return ONE
    return Pow(base, exponent)


def func(name, arg):
    if name not in FUNCTIONS:
        raise ParseError(f"unknown function name {name!r}")
    return Func(name, arg)


def sin(a):
    return func("sin", as_expr(a))


def cos(a):
    return func("cos", as_expr(a))


def tan(a):
    return func("tan", as_expr(a))


def exp(a):
    return func("exp", as_expr(a))


def ln(a):
    return func("ln", as_expr(a))


def sqrt(a):
    return func("sqrt", as_expr(a))


def _free_vars(e):
    if isinstance(e, Var):
        yield e.name
    elif isinstance(e, (Add, Mul)):
        yield from e.left.free_vars
        yield from e.right.free_vars
    elif isinstance(e, Div):
        yield from e.num.free_vars
        yield from e.den.free_vars
    elif isinstance(e, Pow):
        yield from e.base.free_vars
    elif isinstance(e, (Func, Neg)):
        yield from e.arg.free_vars


def is_constant_tree(e):
    return not e.free_vars


# ---------------------------------------------------------------------------
# evaluation


def _div_float(a, b):
    if b == 0:
        raise DomainError("division by zero")
    return a / b


def _rpow(b, r):
    if r.denominator == 1:
        n = r.numerator
        if b == 0 and n < 0:
            raise DomainError("zero raised to a negative power")
        return b**n
    if b < 0:
        if r.denominator % 2 == 0:
            raise DomainError("even root of a negative number")
        sign = -1.0 if r.numerator % 2 else 1.0
        return sign * (-b) ** (r.numerator / r.denominator)
    if b == 0 and r < 0:
        raise DomainError("zero raised to a negative power")
    return b ** (r.numerator / r.denominator)


def _ln(a):
    if a <= 0:
        raise DomainError("ln of a non-positive number")
    return math.log(a)


def _sqrt(a):
    if a < 0:
        raise DomainError("sqrt of a negative number")
    return math.sqrt(a)


_FLOAT_FUNCS = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "ln": _ln,
    "sqrt": _sqrt,
}


def _compile(e):
    if isinstance(e, Const):
        value = float(e.value)
        return lambda env: value
    if isinstance(e, Var):
        name = e.name
        return lambda env: env[name]
    if isinstance(e, Add):
        fa, fb = e.left._fn, e.right._fn
        return lambda env: fa(env) + fb(env)
    if isinstance(e, Mul):
        fa, fb = e.left._fn, e.right._fn
        return lambda env: fa(env) * fb(env)
    if isinstance(e, Div):
        fa, fb = e.num._fn, e.den._fn
        return lambda env: _div_float(fa(env), fb(env))
    if isinstance(e, Neg):
        fa = e.arg._fn
        return lambda env: -fa(env)
    if isinstance(e, Pow):
        fb, r = e.base._fn, e.exponent
        return lambda env: _rpow(fb(env), r)
    if isinstance(e, Func):
        fa, g = e.arg._fn, _FLOAT_FUNCS[e.name]
        return lambda env: g(fa(env))
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e, env):
    """Evaluate ``e`` with variable values from the mapping ``env``."""
    try:
        value = e._fn(env)
    except (ZeroDivisionError, OverflowError, ValueError) as exc:
        raise DomainError(str(exc)) from None
    except KeyError as exc:
        raise DomainError(f"unbound variable {exc.args[0]!r}") from None
    if isinstance(value, complex) or not math.isfinite(value):
        raise DomainError("non-finite value")
    return value


def evaluate_exact(e, env):
    """Rational value of a rational-function tree at rational ``env``.

    Only integer powers are allowed; functions and fractional powers raise
    :class:`DomainError`, as does division by zero.
    """
    memo = {}

    def ev(node):
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Const):
            out = node.value
        elif isinstance(node, Var):
            out = _as_fraction(env[node.name])
        elif isinstance(node, Add):
            out = ev(node.left) + ev(node.right)
        elif isinstance(node, Mul):
            out = ev(node.left) * ev(node.right)
        elif isinstance(node, Neg):
            out = -ev(node.arg)
        elif isinstance(node, Div):
            den = ev(node.den)
            if den == 0:
                raise DomainError("division by zero")
            out = ev(node.num) / den
        elif isinstance(node, Pow) and node.exponent.denominator == 1:
            base = ev(node.base)
            if base == 0 and node.exponent < 0:
                raise DomainError("zero raised to a negative power")
            out = base ** int(node.exponent)
        else:
            raise DomainError(f"no exact value for {unparse(node)}")
        memo[key] = out
        return out

    return ev(as_expr(e))


def eval_scalar(e, t):
    return evaluate(e, {"t": float(t)})


# ---------------------------------------------------------------------------
# differentiation


def differentiate(e, var="t"):
    """Symbolic derivative of ``e`` with respect to ``var``."""
    memo = {}

    def d(node):
        key = id(node)
        hit = memo.get(key)
        if hit is not None:
            return hit[1]
        out = _d(node)
        memo[key] = (node, out)
        return out

    def _d(node):
        if var not in node.free_vars:
            return ZERO
        if isinstance(node, Var):
            return ONE
        if isinstance(node, Add):
            return add(d(node.left), d(node.right))
        if isinstance(node, Neg):
            return neg(d(node.arg))
        if isinstance(node, Mul):
            a, b = node.left, node.right
            return add(mul(d(a), b), mul(a, d(b)))
        if isinstance(node, Div):
            a, b = node.num, node.den
            da, db = d(a), d(b)
            if _is_const(db, 0):
                return div(da, b)
            return div(sub(mul(da, b), mul(a, db)), power(b, 2))
        if isinstance(node, Pow):
            r = node.exponent
            return mul(mul(Const(r), power(node.base, r - 1)), d(node.base))
        if isinstance(node, Func):
            a = node.arg
            inner = d(a)
            name = node.name
            if name == "sin":
                outer = cos(a)
            elif name == "cos":
                outer = neg(sin(a))
            elif name == "tan":
                outer = power(cos(a), -2)
            elif name == "exp":
                outer = node
            elif name == "ln":
                return div(inner, a)
            else:  # sqrt
                return div(inner, mul(Const(Fraction(2)), node))
            return mul(outer, inner)
        raise TypeError(f"not an expression node: {node!r}")

    return d(e)


def substitute(e, mapping):
    """Replace variables by expressions, e.g. ``{"x": T}`` relabels x as t."""
    mapping = {k: as_expr(v) for k, v in mapping.items()}
    memo = {}

    def s(node):
        key = id(node)
        if key in memo:
            return memo[key][1]
        out = _s(node)
        memo[key] = (node, out)
        return out

    def _s(node):
        if not (node.free_vars & mapping.keys()):
            return node
        if isinstance(node, Var):
            return mapping[node.name]
        if isinstance(node, Add):
            return add(s(node.left), s(node.right))
        if isinstance(node, Mul):
            return mul(s(node.left), s(node.right))
        if isinstance(node, Div):
            return div(s(node.num), s(node.den))
        if isinstance(node, Neg):
            return neg(s(node.arg))
        if isinstance(node, Pow):
            return power(s(node.base), node.exponent)
        if isinstance(node, Func):
            return Func(node.name, s(node.arg))
        return node

    return s(e)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d+)?)|([A-Za-z_]\w*)|(\S))")


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        if m.group(1):
            tokens.append(("num", m.group(1), m.start(1)))
        elif m.group(2):
            tokens.append(("name", m.group(2), m.start(2)))
        elif m.group(3):
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise ParseError(f"unexpected character {ch!r}", m.start(3))
            tokens.append(("op", ch, m.start(3)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, variables):
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, tok, what=None):
        if tok[0] == "end":
            raise ParseError("syntax error: unexpected end of input", tok[2])
        raise ParseError(what or f"syntax error: unexpected {tok[1]!r}", tok[2])

    def expect(self, value):
        tok = self.take()
        if tok[1] != value or tok[0] not in ("op",):
            self.fail(tok, f"syntax error: expected {value!r}")
        return tok

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            node = add(node, rhs) if op == "+" else sub(node, rhs)
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()
            rhs = self.factor()
            if op[1] == "*":
                node = mul(node, rhs)
            else:
                try:
                    node = div(node, rhs)
                except DomainError:
                    raise ParseError("division by the constant zero", op[2]) from None
        return node

    def factor(self):
        node = self.base()
        if self.peek() == ("op", "^", self.peek()[2]):
            self.take()
            exponent = self.signed_rational()
            try:
                node = power(node, exponent)
            except DomainError as exc:
                raise ParseError(str(exc), self.peek()[2]) from None
        return node

    def signed_rational(self):
        paren = False
        if self.peek()[:2] == ("op", "("):
            self.take()
            paren = True
        sign = 1
        if self.peek()[:2] == ("op", "-"):
            self.take()
            sign = -1
        tok = self.take()
        if tok[0] != "num" or "." in tok[1]:
            self.fail(tok, "syntax error: exponent must be an integer or p/q")
        value = Fraction(int(tok[1]))
        if self.peek()[:2] == ("op", "/") and self.tokens[self.i + 1][0] == "num":
            self.take()
            den = self.take()
            if "." in den[1] or int(den[1]) == 0:
                self.fail(den, "syntax error: bad exponent denominator")
            value /= int(den[1])
        if paren:
            self.expect(")")
        return sign * value

    def base(self):
        tok = self.take()
        kind, text, pos = tok
        if kind == "num":
            return Const(Fraction(text))
        if kind == "name":
            if text in self.variables:
                return Var(text)
            if self.peek()[:2] == ("op", "("):
                if text not in FUNCTIONS:
                    raise ParseError(f"unknown function name {text!r}", pos)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Func(text, arg)
            raise ParseError(f"unknown variable {text!r}", pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "op" and text == "-":
            return neg(self.base())
        self.fail(tok)


def parse(text, variables=("t",)):
    """Parse ``text`` in the expression grammar over the given variable names.

    Note the grammar binds ``^`` to a signed rational literal, so ``t^2/3``
    reads as ``t^(2/3)`` and ``-t^2`` as ``(-t)^2``.
    """
    p = _Parser(text, tuple(variables))
    node = p.expr()
    tok = p.peek()
    if tok[0] != "end":
        p.fail(tok)
    return node


def parse_scalar(text):
    return parse(text, ("t",))


def parse_phase(text):
    return parse(text, ("x", "v"))


# ---------------------------------------------------------------------------
# printing

_ATOMIC = (Var, Func)


def _fmt_rational(q):
    if q.denominator == 1:
        return str(q.numerator) if q >= 0 else f"(-{-q.numerator})"
    if q >= 0:
        return f"({q.numerator}/{q.denominator})"
    return f"(-{-q.numerator}/{q.denominator})"


def unparse(e):
    """Render ``e`` so that :func:`parse` reads it back to the same tree shape."""
    if isinstance(e, Const):
        return _fmt_rational(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({unparse(e.arg)})"
    if isinstance(e, Add):
        right = e.right
        if isinstance(right, Neg):
            return f"{unparse(e.left)} - {_wrap_sum(right.arg)}"
        return f"{unparse(e.left)} + {_wrap_sum(right)}"
    if isinstance(e, Neg):
        return f"-({unparse(e.arg)})" if not isinstance(e.arg, _ATOMIC) else f"-{unparse(e.arg)}"
    if isinstance(e, Mul):
        return f"{_wrap_prod(e.left)}*{_wrap_prod(e.right, True)}"
    if isinstance(e, Div):
        return f"{_wrap_prod(e.num)}/{_wrap_prod(e.den, True)}"
    if isinstance(e, Pow):
        base = unparse(e.base)
        if not isinstance(e.base, _ATOMIC) or isinstance(e.base, Const):
            base = f"({base})"
        r = e.exponent
        exp_text = str(r.numerator) if r.denominator == 1 else f"{r.numerator}/{r.denominator}"
        return f"({base}^{exp_text})"
    raise TypeError(f"not an expression node: {e!r}")


def _wrap_sum(e):
    text = unparse(e)
    return f"({text})" if isinstance(e, (Add, Neg)) else text


def _wrap_prod(e, right=False):
    text = unparse(e)
    if isinstance(e, (Add, Neg)) or (right and isinstance(e, (Mul, Div))):
        return f"({text})"
    return text


# ---------------------------------------------------------------------------
# numeric identity testing


def sample_stream(seed=None, interval=None, sample_range=None):
    """Endless deterministic stream of sample times.

    Without ``interval`` the times are drawn with random sign from
    ``|t| in sample_range`` (default ``[0.1, 3]``).
    """
    rng = random.Random(SETTINGS.seed if seed is None else seed)
    lo, hi = sample_range or SETTINGS.sample_range
    while True:
        if interval is not None:
            yield rng.uniform(float(interval[0]), float(interval[1]))
        else:
            magnitude = rng.uniform(lo, hi)
            yield magnitude if rng.random() < 0.5 else -magnitude


def phase_sample_stream(seed=None, box=((0.2, 1.5), (0.2, 1.5))):
    """Endless deterministic stream of ``(x, v)`` points in ``box``."""
    rng = random.Random(SETTINGS.seed if seed is None else seed)
    (x0, x1), (v0, v1) = box
    while True:
        yield rng.uniform(x0, x1), rng.uniform(v0, v1)


def sample_values(exprs, samples=None, seed=None, interval=None, max_tries=None):
    """Evaluate several expressions at common valid sample times.

    Returns a list of ``(t, [values...])``; points where any expression hits
    a domain error are skipped.
    """
    samples = samples or SETTINGS.samples
    max_tries = max_tries or 20 * samples
    out = []
    stream = sample_stream(seed, interval)
    for _ in range(max_tries):
        t = next(stream)
        try:
            vals = [eval_scalar(e, t) for e in exprs]
        except DomainError:
            continue
        out.append((t, vals))
        if len(out) == samples:
            break
    if not out:
        raise IndeterminateError("every sample point hit a domain error")
    return out


def expr_equal_numeric(a, b, samples=None, tol=None, seed=None, interval=None):
    """True iff ``|a-b| <= tol*(1+max(|a|,|b|))`` at every sampled time."""
    samples = samples or SETTINGS.samples
    if samples < 8:
        raise ValueError("expr_equal_numeric needs at least 8 samples")
    tol = SETTINGS.tol if tol is None else tol
    for _, (va, vb) in sample_values([as_expr(a), as_expr(b)], samples, seed, interval):
        if abs(va - vb) > tol * (1.0 + max(abs(va), abs(vb))):
            return False
    return True


def is_zero(e, **kw):
    if isinstance(e, Const):
        return e.value == 0
    return expr_equal_numeric(e, ZERO, **kw)


def constant_value(e, **kw):
    """Return the constant value of ``e`` if it is numerically constant, else None."""
    if isinstance(e, Const):
        return e.value
    pts = sample_values([e], seed=kw.get("seed"), interval=kw.get("interval"))
    ref = pts[0][1][0]
    tol = kw.get("tol", SETTINGS.tol)
    for _, (val,) in pts:
        if abs(val - ref) > tol * (1.0 + max(abs(val), abs(ref))):
            return None
    return ref
