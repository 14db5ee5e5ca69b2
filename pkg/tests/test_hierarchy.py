import pytest
import sympy as sp
from hypothesis import given, strategies as st

from abelkit.errors import PreconditionError
from abelkit.expr import parse
from abelkit.hierarchy import (
    HierarchyEquation,
    abel_operator,
    abel_power,
    build_hierarchy_equation,
    to_planar_vf,
    total_derivative,
)
from abelkit.poly import JetPoly, Poly, xy

t = sp.Symbol("t")
xf = sp.Function("x")(t)


def jet_to_sympy(p):
    out = sp.Integer(0)
    for mono, c in p.terms.items():
        term = sp.Rational(c.numerator, c.denominator)
        for j, e in enumerate(mono):
            term *= sp.diff(xf, t, j) ** e
        out += term
    return out


def oracle_power(n):
    e = xf
    for _ in range(n):
        e = sp.diff(e, t) + xf**2 * e
    return sp.expand(e)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_powers_match_symbolic_iteration(n):
    assert sp.expand(jet_to_sympy(abel_power(n)) - oracle_power(n)) == 0


def test_known_members():
    x = JetPoly.u(0, 3)
    u = [JetPoly.u(j, 3) for j in range(4)]
    assert JetPoly.of(abel_power(1), 3) == JetPoly.of(u[1] + x**3, 3)
    assert JetPoly.of(abel_power(2), 3) == JetPoly.of(u[2] + (x**2 * u[1]).scale(4) + x**5, 3)
    expected3 = u[3] + (x**2 * u[2]).scale(5) + (x * u[1] ** 2).scale(8) + (x**4 * u[1]).scale(9) + x**7
    assert abel_power(3) == JetPoly.of(expected3, 3)


@given(st.integers(min_value=0, max_value=3))
def test_order_tracking(n):
    assert abel_power(n).order == n


def test_total_derivative_leibniz():
    p = JetPoly.of(JetPoly.u(0, 1) ** 2 * JetPoly.u(1, 1), 1)
    lhs = jet_to_sympy(total_derivative(p))
    assert sp.expand(lhs - sp.diff(jet_to_sympy(p), t)) == 0


def test_build_equation():
    h = build_hierarchy_equation(["1", "0", "0", "0"], 2)
    assert h.is_constant()
    assert h.jet().format() == "x^5 + 4*x^2*u1 + u2"
    h1 = build_hierarchy_equation(["1", "0", "0"], 1)
    assert h1.jet().format() == "x^3 + u1"


def test_build_equation_arity():
    with pytest.raises(ValueError):
        build_hierarchy_equation(["1", "0"], 2)
    with pytest.raises(ValueError):
        build_hierarchy_equation(["1"], 0)


def test_constant_term_and_linear_combination():
    h = build_hierarchy_equation(["2", "3", "-1", "5"], 2)
    x = JetPoly.u(0, 2)
    u1, u2 = JetPoly.u(1, 2), JetPoly.u(2, 2)
    expected = (
        (u2 + (x**2 * u1).scale(4) + x**5).scale(2)
        + (u1 + x**3).scale(3)
        - x
        + Poly.const(5, 3)
    )
    assert h.jet() == JetPoly.of(expected, 2)


def test_non_constant_coefficients_have_no_jet():
    h = build_hierarchy_equation(["1", "t", "0", "0"], 2)
    assert not h.is_constant()
    with pytest.raises(PreconditionError):
        h.jet()


def test_planar_field():
    X = to_planar_vf(build_hierarchy_equation(["1", "0", "0", "0"], 2))
    assert X.P == xy("v")
    assert X.Q == xy("-4*x^2*v - x^5")
    X2 = to_planar_vf(build_hierarchy_equation(["2", "0", "0", "0"], 2))
    assert X2.Q == xy("-4*x^2*v - x^5")


def test_planar_field_rejects_wrong_order():
    with pytest.raises(PreconditionError):
        to_planar_vf(build_hierarchy_equation(["1", "0", "0"], 1).jet())
