"""Darboux polynomials and Jacobi multipliers of planar polynomial fields
``X = P d/dx + Q d/dv``.  Everything symbolic is exact over the rationals."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, NoMultiplierError, PreconditionError
from .expr import phase_sample_stream
from .poly import Poly, fmt_rational, rational_roots, solve_linear_system


@dataclass(frozen=True)
class PlanarVF:
    P: Poly
    Q: Poly

    def __post_init__(self):
        if self.P.nvars != 2 or self.Q.nvars != 2:
            raise ValueError("planar fields use polynomials in (x, v)")
        if not self.P and not self.Q:
            raise ValueError("P and Q are both zero")

    def __call__(self, x, v):
        return self.P.evaluate((x, v)), self.Q.evaluate((x, v))

    def ode(self):
        return lambda t, y: [self.P.evaluate(y), self.Q.evaluate(y)]

    @property
    def degree(self):
        return max(self.P.degree(), self.Q.degree())

    def to_json(self):
        return {"P": self.P.to_json(), "Q": self.Q.to_json()}

    @classmethod
    def from_json(cls, data):
        return cls(Poly.from_json(data["P"], 2), Poly.from_json(data["Q"], 2))


@dataclass(frozen=True)
class DarbouxPair:
    D: Poly
    cofactor: Poly

    def to_json(self):
        return {"D": self.D.to_json(), "cofactor": self.cofactor.to_json()}

    @classmethod
    def from_json(cls, data):
        return cls(Poly.from_json(data["D"], 2), Poly.from_json(data["cofactor"], 2))


def divergence(X):
    return X.P.diff(0) + X.Q.diff(1)


def apply_vf(X, D):
    return X.P * D.diff(0) + X.Q * D.diff(1)


def is_darboux_pair(X, D, f):
    return (apply_vf(X, D) - f * D).is_zero()


# ---------------------------------------------------------------------------
# search for Darboux polynomials v + b(x)


def _divide_by_v_plus_b(N, b):
    """Quotient and remainder of ``N(x, v)`` by ``v + b(x)`` (``b`` in the same universe)."""
    by_v = N.collect(1)
    top = max(by_v, default=0)
    if top == 0:
        return Poly.zero(2), N
    v = Poly.var(1, 2)
    q = {top - 1: by_v[top]}
    for k in range(top - 1, 0, -1):
        q[k - 1] = by_v.get(k, Poly.zero(2)) - b * q[k]
    rem = by_v.get(0, Poly.zero(2)) - b * q[0]
    quotient = Poly.zero(2)
    for k, c in q.items():
        quotient = quotient + c * v**k
    return quotient, rem


def find_darboux_vlinear(X, max_bdeg):
    """All ``(v + b(x), cofactor)`` pairs with ``deg b <= max_bdeg`` and rational coefficients."""
    if max_bdeg < 0:
        raise PreconditionError("max_bdeg must be non-negative")
    n = max_bdeg + 1
    nv = n + 1  # x plus the unknown coefficients of b
    x = Poly.var(0, nv)
    b = Poly.zero(nv)
    db = Poly.zero(nv)
    for i in range(n):
        b = b + Poly.var(i + 1, nv) * x**i
        if i:
            db = db + Poly.var(i + 1, nv).scale(i) * x ** (i - 1)

    def lift_at_minus_b(p):
        out = Poly.zero(nv)
        minus_b = -b
        for (ex, ev), c in p.terms.items():
            out = out + Poly.const(c, nv) * x**ex * minus_b**ev
        return out

    remainder = lift_at_minus_b(X.P) * db + lift_at_minus_b(X.Q)
    eqs = []
    for _, coeff in sorted(remainder.collect(0).items(), reverse=True):
        eqs.append(Poly({(0,) + m[1:]: c for m, c in coeff.terms.items()}, nv))
    raw = _solve_system(eqs, nv)
    pairs = []
    seen = set()
    for point in raw:
        coeffs = point[1:]
        bx = Poly({(i, 0): c for i, c in enumerate(coeffs)}, 2)
        D = Poly.var(1, 2) + bx
        quotient, rem = _divide_by_v_plus_b(apply_vf(X, D), bx)
        if rem or not is_darboux_pair(X, D, quotient):
            continue
        assert quotient.degree() <= max(X.degree - 1, 0), "cofactor degree bound violated"
        key = tuple(coeffs)
        if key in seen:
            continue
        seen.add(key)
        pairs.append(DarbouxPair(D, quotient))

    def order(pair):
        bx = pair.D - Poly.var(1, 2)
        deg = bx.degree() if bx else -1
        return (deg, tuple(bx.coeff((i, 0)) for i in range(n - 1, -1, -1)))

    return sorted(pairs, key=order)


def _solve_system(eqs, nvars):
    """Wrapper around the back-substitution solver that skips the ``x`` slot."""
    sols = []

    def recurse(system, values, pending):
        system = [e for e in system if e]
        if any(e.degree() == 0 for e in system):
            return
        occurring = lambda e: {i for m in e.terms for i, p in enumerate(m) if p}
        if not system:
            vals = [values.get(i, Fraction(0)) for i in range(nvars)]
            for i, expr in reversed(pending):
                vals[i] = expr.evaluate_exact(vals)
            sols.append(tuple(vals))
            return
        for e in sorted(system, key=lambda e: (len(occurring(e)), e.degree())):
            vs = occurring(e)
            if len(vs) == 1:
                (i,) = vs
                coeffs = [Fraction(0)] * (e.degree(i) + 1)
                for m, c in e.terms.items():
                    coeffs[m[i]] += c
                for r in rational_roots(coeffs):
                    point = Poly.const(r, nvars)
                    recurse([f.substitute(i, point) for f in system], {**values, i: r}, pending)
                return
        # no univariate equation: eliminate a variable that enters linearly
        for e in sorted(system, key=lambda e: (e.degree(), len(occurring(e)))):
            for i in sorted(occurring(e), reverse=True):
                by_i = e.collect(i)
                if max(by_i) == 1 and by_i[1].degree() == 0:
                    lead = by_i[1].constant_term()
                    expr = -by_i.get(0, Poly.zero(nvars)).scale(1 / lead)
                    nxt = [f.substitute(i, expr) for f in system]
                    recurse(nxt, values, pending + [(i, expr)])
                    return

    recurse(eqs, {}, [])
    return sols


# ---------------------------------------------------------------------------
# Jacobi multipliers


@dataclass(frozen=True)
class MultiplierProduct:
    """``R = prod base_i ** exponent_i``."""

    factors: tuple

    def __post_init__(self):
        facs = tuple((b, Fraction(e)) for b, e in self.factors if Fraction(e) != 0)
        if len({b for b, _ in facs}) != len(facs):
            raise ValueError("multiplier bases must be pairwise distinct")
        object.__setattr__(self, "factors", facs)

    def __call__(self, x, v):
        out = 1.0
        for base, e in self.factors:
            out *= _real_power(base.evaluate((x, v)), e)
        return out

    def to_json(self):
        return {
            "factors": [{"base": b.to_json(), "exponent": fmt_rational(e)} for b, e in self.factors]
        }


def _real_power(b, e):
    if b == 0 and e < 0:
        raise DomainError("zero base with negative exponent")
    if b >= 0:
        return b ** float(e)
    if e.denominator % 2 == 0:
        raise DomainError("even root of a negative base")
    mag = abs(b) ** float(e)
    return -mag if e.numerator % 2 else mag


def _coefficient_rows(polys, target):
    monos = sorted({m for p in polys + [target] for m in p.terms})
    rows = [[p.coeff(m) for p in polys] for m in monos]
    rhs = [target.coeff(m) for m in monos]
    return rows, rhs


def jm_exponent_family(pairs, X, support=None):
    """Particular solution and free columns of ``sum nu_i f_i = -div X``, or ``None``."""
    support = range(len(pairs)) if support is None else support
    polys = [pairs[i].cofactor for i in support]
    rows, rhs = _coefficient_rows(polys, -divergence(X))
    return solve_linear_system(rows, rhs, len(polys))


def jm_exponents(pairs, X):
    """Exponents ``nu`` with ``sum nu_i f_i = -div X``.

    Supports are tried smallest first and in input order; under-determined
    systems get their free exponents set to zero.
    """
    if not pairs:
        raise NoMultiplierError("no Darboux pairs supplied")
    for size in range(1, len(pairs) + 1):
        for support in itertools.combinations(range(len(pairs)), size):
            sol = jm_exponent_family(pairs, X, support)
            if sol is None:
                continue
            nu = [Fraction(0)] * len(pairs)
            for i, val in zip(support, sol[0]):
                nu[i] = val
            return nu
    raise NoMultiplierError("exponent condition is inconsistent for these pairs")


def build_multiplier(pairs, nu):
    return MultiplierProduct(tuple((p.D, e) for p, e in zip(pairs, nu)))


def jm_residual(R, X, points=50, seed=None, box=((0.2, 1.5), (0.2, 1.5)), guard=1e-3):
    """Max ``|X(R) + R div X|`` over sample points, via the logarithmic derivative.

    ``X(R)/R = sum nu_i X(D_i)/D_i`` with ``X(D_i)`` computed exactly, so the
    check does not trust any stored cofactor.
    """
    div = divergence(X)
    applied = [(apply_vf(X, base), base, e) for base, e in R.factors]
    worst = 0.0
    used = 0
    for x, v in phase_sample_stream(seed, box):
        if used == points:
            break
        try:
            r = R(x, v)
        except DomainError:
            continue
        bases = [base.evaluate((x, v)) for _, base, _ in applied]
        if any(abs(bv) < guard for bv in bases):
            continue
        log_d = sum(float(e) * xd.evaluate((x, v)) / bv for (xd, _, e), bv in zip(applied, bases))
        val = abs(r * (log_d + div.evaluate((x, v))))
        if math.isfinite(val):
            worst = max(worst, val)
            used += 1
    return worst
