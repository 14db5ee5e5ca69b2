from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, strategies as st

from abelkit.poly import (
    JetPoly,
    Poly,
    PolyVF1D,
    nullspace,
    rank,
    rational_roots,
    rref,
    solve_linear_system,
    xy,
)

from conftest import small_rationals

X, V = sp.symbols("x v")


@st.composite
def phase_polys(draw, max_deg=3):
    n = draw(st.integers(min_value=0, max_value=5))
    terms = {}
    for _ in range(n):
        i = draw(st.integers(min_value=0, max_value=max_deg))
        j = draw(st.integers(min_value=0, max_value=max_deg - i))
        terms[(i, j)] = draw(small_rationals)
    return Poly(terms, 2)


def as_sympy(p):
    return sum((sp.Rational(c.numerator, c.denominator) * X**i * V**j for (i, j), c in p.terms.items()), sp.Integer(0))


@given(phase_polys(), phase_polys(), phase_polys())
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == Poly.zero(2)


@given(phase_polys(), phase_polys())
def test_product_against_sympy(a, b):
    assert sp.expand(as_sympy(a * b) - as_sympy(a) * as_sympy(b)) == 0


@given(phase_polys(), phase_polys())
def test_derivation_rule(a, b):
    for i in (0, 1):
        assert (a * b).diff(i) == a.diff(i) * b + a * b.diff(i)


@given(phase_polys(), small_rationals, small_rationals)
def test_exact_evaluation_matches_sympy(p, x, v):
    expected = as_sympy(p).subs({X: sp.Rational(x.numerator, x.denominator), V: sp.Rational(v.numerator, v.denominator)})
    assert p.evaluate_exact((x, v)) == Fraction(int(sp.numer(expected)), int(sp.denom(expected)))


def test_xy_parser():
    p = xy("-4*x^2*v - x^5 + 1/2")
    assert p.coeff((2, 1)) == -4
    assert p.coeff((5, 0)) == -1
    assert p.constant_term() == Fraction(1, 2)
    assert p.degree() == 5
    assert p.degree(1) == 1


def test_substitute_and_collect():
    p = xy("v^2 + x*v + x^3")
    q = p.substitute(1, -xy("x^3"))
    assert q == xy("x^6 - x^4 + x^3")
    parts = p.collect(1)
    assert parts[2] == Poly.const(1, 2) and parts[1] == xy("x") and parts[0] == xy("x^3")


def test_json_roundtrip():
    p = xy("3*v + x^3 - 2/3*x")
    assert Poly.from_json(p.to_json(), 2) == p


def test_jet_polys():
    u2 = JetPoly.u(2)
    assert u2.order == 2 and u2.nvars == 3
    x = JetPoly.u(0, 2)
    p = JetPoly.of(u2 + x**5, 2)
    assert p.format() == "x^5 + u2"
    with pytest.raises(ValueError):
        JetPoly.of(u2, 1)


def test_vf1d_basics():
    f = PolyVF1D([1, 0, 3])
    assert f.degree == 2
    assert f.derivative() == PolyVF1D([0, 6])
    assert f(Fraction(2)) == 13
    assert PolyVF1D([0, 0, 0]).is_zero()


def test_linear_algebra():
    rows = [[1, 2, 3], [2, 4, 6], [1, 0, 1]]
    assert rank(rows) == 2
    red, piv = rref(rows)
    assert piv == [0, 1]
    (n,) = nullspace(rows, 3)
    assert all(sum(Fraction(a) * b for a, b in zip(r, n)) == 0 for r in rows)
    sol, free = solve_linear_system(rows, [6, 12, 2], 3)
    assert free == [2]
    assert all(sum(Fraction(a) * b for a, b in zip(r, sol)) == rhs for r, rhs in zip(rows, [6, 12, 2]))
    assert solve_linear_system(rows, [6, 13, 2], 3) is None


@given(st.lists(st.fractions(min_value=-4, max_value=4, max_denominator=5), min_size=1, max_size=4))
def test_rational_roots_recovered(roots):
    coeffs = [Fraction(1)]
    for r in roots:
        # multiply by (z - r)
        coeffs = [-r * coeffs[0]] + [coeffs[i - 1] - r * coeffs[i] for i in range(1, len(coeffs))] + [coeffs[-1]]
    assert set(rational_roots(coeffs)) == set(roots)


def test_rational_roots_skips_irrational():
    assert rational_roots([-2, 0, 1]) == []
    with pytest.raises(ValueError):
        rational_roots([0, 0])
