"""Exact rational polynomials.

``Poly`` is a sparse polynomial in a fixed number of variables with
:class:`~fractions.Fraction` coefficients.  The three kinds the toolkit needs
are thin conveniences on top of it:

* phase polynomials in ``(x, v)`` (``nvars == 2``), built with :func:`xy`;
* jet polynomials in ``u0 = x, u1, ..., uK`` (:class:`JetPoly`);
* one-dimensional vector fields ``f(x) d/dx`` (:class:`PolyVF1D`, dense).
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

from .expr import (
    Add,
    Const,
    Div,
    Mul,
    Neg,
    Pow,
    Var,
    add,
    const,
    mul,
    power,
)


def _frac(c):
    return c if isinstance(c, Fraction) else Fraction(c)


def fmt_rational(q):
    q = _frac(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


class Poly:
    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, terms=None, nvars=2):
        self.nvars = nvars
        clean = {}
        for mono, c in (terms or {}).items():
            c = _frac(c)
            if c != 0:
                mono = tuple(mono)
                if len(mono) != nvars:
                    raise ValueError(f"monomial {mono} has wrong arity for {nvars} variables")
                clean[mono] = clean.get(mono, 0) + c
                if clean[mono] == 0:
                    del clean[mono]
        self.terms = clean
        self._hash = None

    # -- constructors ---------------------------------------------------
    @classmethod
    def const(cls, c, nvars=2):
        return cls({(0,) * nvars: c}, nvars)

    @classmethod
    def var(cls, i, nvars=2):
        mono = [0] * nvars
        mono[i] = 1
        return cls({tuple(mono): 1}, nvars)

    @classmethod
    def zero(cls, nvars=2):
        return cls({}, nvars)

    # -- arithmetic -----------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ValueError("operands live in different variable universes")
            return other
        return Poly.const(other, self.nvars)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0) + c
        return Poly(terms, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()}, self.nvars)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return self.scale(other)
        other = self._coerce(other)
        terms = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                terms[m] = terms.get(m, 0) + c1 * c2
        return Poly(terms, self.nvars)

    __rmul__ = __mul__

    def scale(self, c):
        c = _frac(c)
        return Poly({m: c * v for m, v in self.terms.items()}, self.nvars)

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        out = Poly.const(1, self.nvars)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def diff(self, i):
        terms = {}
        for m, c in self.terms.items():
            if m[i]:
                mm = list(m)
                mm[i] -= 1
                terms[tuple(mm)] = c * m[i]
        return Poly(terms, self.nvars)

    # -- queries --------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == Poly.const(other, self.nvars)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    def degree(self, i=None):
        if not self.terms:
            return -1
        if i is None:
            return max(sum(m) for m in self.terms)
        return max(m[i] for m in self.terms)

    def coeff(self, mono):
        return self.terms.get(tuple(mono), Fraction(0))

    def constant_term(self):
        return self.coeff((0,) * self.nvars)

    def evaluate(self, point):
        total = 0.0
        for m, c in self.terms.items():
            term = float(c)
            for xi, e in zip(point, m):
                if e:
                    term *= xi**e
            total += term
        return total

    def evaluate_exact(self, point):
        total = Fraction(0)
        for m, c in self.terms.items():
            term = c
            for xi, e in zip(point, m):
                if e:
                    term *= _frac(xi) ** e
            total += term
        return total

    __call__ = evaluate

    def substitute(self, i, poly):
        """Replace variable ``i`` by ``poly`` (same universe)."""
        out = Poly.zero(self.nvars)
        cache = {0: Poly.const(1, self.nvars)}
        for m, c in self.terms.items():
            e = m[i]
            if e not in cache:
                cache[e] = poly**e
            mm = list(m)
            mm[i] = 0
            out = out + Poly({tuple(mm): c}, self.nvars) * cache[e]
        return out

    def collect(self, i):
        """Group by powers of variable ``i``: ``{power: Poly without that variable}``."""
        groups = {}
        for m, c in self.terms.items():
            mm = list(m)
            e = mm[i]
            mm[i] = 0
            groups.setdefault(e, {})[tuple(mm)] = c
        return {e: Poly(t, self.nvars) for e, t in groups.items()}

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda mc: (-sum(mc[0]), [-e for e in mc[0]]))

    def format(self, names=None):
        names = names or default_names(self.nvars)
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            factors = []
            for name, e in zip(names, m):
                if e == 1:
                    factors.append(name)
                elif e:
                    factors.append(f"{name}^{e}")
            mono = "*".join(factors)
            mag = abs(c)
            if not mono:
                body = fmt_rational(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{fmt_rational(mag)}*{mono}"
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"Poly({self.format()!r})"

    def to_expr(self, names=None):
        names = names or default_names(self.nvars)
        out = const(0)
        for m, c in self.sorted_terms():
            term = const(c)
            for name, e in zip(names, m):
                if e:
                    term = mul(term, power(Var(name), e))
            out = add(out, term)
        return out

    def to_json(self):
        return {
            "monomials": [
                {"powers": list(m), "coeff": fmt_rational(c)} for m, c in self.sorted_terms()
            ]
        }

    @classmethod
    def from_json(cls, data, nvars=None):
        monos = data["monomials"] if isinstance(data, dict) else data
        if nvars is None:
            nvars = len(monos[0]["powers"]) if monos else 2
        return cls({tuple(m["powers"]): Fraction(str(m["coeff"])) for m in monos}, nvars)


def default_names(nvars):
    if nvars == 2:
        return ("x", "v")
    if nvars == 1:
        return ("x",)
    return tuple(f"u{i}" for i in range(nvars))


# ---------------------------------------------------------------------------
# phase polynomials


def xy(text_or_terms):
    """Build a phase polynomial from an expression string in x, v or a term dict."""
    if isinstance(text_or_terms, str):
        from .expr import parse_phase

        return poly_from_expr(parse_phase(text_or_terms), ("x", "v"))
    return Poly(text_or_terms, 2)


PX = Poly.var(0, 2)
PV = Poly.var(1, 2)


def poly_from_expr(e, names):
    """Convert a polynomial-shaped expression tree into a :class:`Poly`."""
    n = len(names)
    if isinstance(e, Const):
        return Poly.const(e.value, n)
    if isinstance(e, Var):
        if e.name not in names:
            raise ValueError(f"variable {e.name!r} not in {names}")
        return Poly.var(names.index(e.name), n)
    if isinstance(e, Add):
        return poly_from_expr(e.left, names) + poly_from_expr(e.right, names)
    if isinstance(e, Mul):
        return poly_from_expr(e.left, names) * poly_from_expr(e.right, names)
    if isinstance(e, Neg):
        return -poly_from_expr(e.arg, names)
    if isinstance(e, Div) and isinstance(e.den, Const):
        return poly_from_expr(e.num, names).scale(1 / e.den.value)
    if isinstance(e, Pow) and e.exponent.denominator == 1 and e.exponent >= 0:
        return poly_from_expr(e.base, names) ** int(e.exponent)
    raise ValueError(f"expression is not a polynomial: {e}")


def as_poly_expr(p):
    """Phase polynomial as an expression in ``x, v``."""
    return p.to_expr(("x", "v"))


# ---------------------------------------------------------------------------
# jets


class JetPoly(Poly):
    """Polynomial in jet variables ``u0 (= x), u1, ..., u_order``."""

    __slots__ = ("order",)

    def __init__(self, terms=None, order=0):
        super().__init__(terms, order + 1)
        self.order = order

    @classmethod
    def of(cls, p, order=None):
        order = p.nvars - 1 if order is None else order
        if order + 1 < p.nvars:
            if any(any(m[order + 1:]) for m in p.terms):
                raise ValueError("jet polynomial uses variables above the requested order")
            return cls({m[: order + 1]: c for m, c in p.terms.items()}, order)
        pad = (0,) * (order + 1 - p.nvars)
        return cls({m + pad: c for m, c in p.terms.items()}, order)

    @classmethod
    def u(cls, j, order=None):
        order = j if order is None else order
        return cls.of(Poly.var(j, order + 1), order)

    def raise_order(self, k=1):
        return JetPoly.of(self, self.order + k)

    def format(self, names=None):
        names = names or ("x",) + tuple(f"u{i}" for i in range(1, self.nvars))
        return Poly.format(self, names)

    def __repr__(self):
        return f"JetPoly({self.format()!r}, order={self.order})"

    def to_json(self):
        out = Poly.to_json(self)
        out["order"] = self.order
        return out


def jet(p, order):
    return JetPoly.of(p, order)


# ---------------------------------------------------------------------------
# one-dimensional vector fields


class PolyVF1D:
    """``f(x) d/dx`` with dense rational coefficients ``[f0, f1, ...]``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        cs = [_frac(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def monomial(cls, n, c=1):
        return cls([0] * n + [c])

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def is_zero(self):
        return not self.coeffs

    def __eq__(self, other):
        return isinstance(other, PolyVF1D) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (n - len(self.coeffs))
        b = other.coeffs + (0,) * (n - len(other.coeffs))
        return PolyVF1D([x + y for x, y in zip(a, b)])

    def __neg__(self):
        return PolyVF1D([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = _frac(c)
        return PolyVF1D([c * a for a in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, PolyVF1D):
            if not self.coeffs or not other.coeffs:
                return PolyVF1D([])
            out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
            return PolyVF1D(out)
        return self.scale(other)

    __rmul__ = __mul__

    def derivative(self):
        return PolyVF1D([i * c for i, c in enumerate(self.coeffs)][1:])

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def padded(self, n):
        return list(self.coeffs) + [Fraction(0)] * (n - len(self.coeffs))

    def format(self):
        p = Poly({(i,): c for i, c in enumerate(self.coeffs)}, 1)
        return f"({p.format(('x',))})*d/dx"

    def __repr__(self):
        return f"PolyVF1D({self.format()!r})"

    def to_json(self):
        return [fmt_rational(c) for c in self.coeffs]


# ---------------------------------------------------------------------------
# exact linear algebra over Q


def rref(rows, ncols=None):
    """Reduced row echelon form. Returns ``(matrix, pivot_columns)``."""
    m = [[_frac(v) for v in row] for row in rows]
    if ncols is None:
        ncols = len(m[0]) if m else 0
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r] if r else [], pivots


def nullspace(rows, ncols):
    """Basis of ``{x : A x = 0}`` as a list of vectors."""
    red, pivots = rref(rows, ncols) if rows else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * ncols
        vec[f] = Fraction(1)
        for row, pc in zip(red, pivots):
            vec[pc] = -row[f]
        basis.append(vec)
    return basis


def solve_linear_system(rows, rhs, ncols):
    """Particular solution of ``A x = b`` with free variables set to zero.

    Returns ``(solution, free_columns)`` or ``None`` when inconsistent.
    """
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    red, pivots = rref(aug, ncols + 1) if aug else ([], [])
    if ncols in pivots:
        return None
    x = [Fraction(0)] * ncols
    for row, pc in zip(red, pivots):
        x[pc] = row[ncols]
    free = [c for c in range(ncols) if c not in pivots]
    return x, free


def rank(rows, ncols=None):
    return len(rref(rows, ncols)[1]) if rows else 0


# ---------------------------------------------------------------------------
# univariate rational roots


def _divisors(n):
    n = abs(n)
    small = [d for d in range(1, int(n**0.5) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


def rational_roots(coeffs):
    """Distinct rational roots of ``sum coeffs[i] * z**i`` (exact)."""
    cs = [_frac(c) for c in coeffs]
    while cs and cs[-1] == 0:
        cs.pop()
    if len(cs) <= 1:
        if not cs:
            raise ValueError("the zero polynomial has every number as a root")
        return []
    roots = []
    while cs[0] == 0:
        if Fraction(0) not in roots:
            roots.append(Fraction(0))
        cs = cs[1:]
    lcm = 1
    for c in cs:
        lcm = lcm * c.denominator // gcd(lcm, c.denominator)
    ints = [int(c * lcm) for c in cs]
    g = 0
    for v in ints:
        g = gcd(g, v)
    ints = [v // g for v in ints]
    if len(ints) == 1:
        return roots
    for p in _divisors(ints[0]):
        for q in _divisors(ints[-1]):
            for cand in (Fraction(p, q), Fraction(-p, q)):
                if cand in roots:
                    continue
                acc = Fraction(0)
                for c in reversed(ints):
                    acc = acc * cand + c
                if acc == 0:
                    roots.append(cand)
    return sorted(roots)


__all__ = [
    "Poly",
    "JetPoly",
    "PolyVF1D",
    "PX",
    "PV",
    "xy",
    "jet",
    "poly_from_expr",
    "as_poly_expr",
    "rref",
    "nullspace",
    "solve_linear_system",
    "rank",
    "rational_roots",
    "fmt_rational",
]
