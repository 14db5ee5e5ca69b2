import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from abelkit.darboux_jm import DarbouxPair, build_multiplier, jm_residual
from abelkit.errors import PreconditionError
from abelkit.expr import evaluate, parse_phase
from abelkit.inverse_lagrangian import (
    PowerForm,
    energy,
    euler_lagrange_residual,
    free_particle,
    helmholtz_residual_1d,
    lagrangian_from_multiplier,
    power_form_from_multiplier,
)
from abelkit.numerics import conservation_residual, integrate_ode
from abelkit.poly import Poly, xy

F_A = xy("-4*x^2*v - x^5")


def multiplier(D, nu):
    return power_form_from_multiplier(build_multiplier([DarbouxPair(xy(D), Poly.zero(2))], [nu]))


def test_lagrangians_of_gamma():
    L1 = lagrangian_from_multiplier(multiplier("v + x^3", -4))
    assert (L1.c, L1.rho) == (Fraction(1, 6), -2)
    L2 = lagrangian_from_multiplier(multiplier("3*v + x^3", Fraction(-4, 3)))
    assert L2.rho == Fraction(2, 3)
    for L in (L1, L2):
        assert euler_lagrange_residual(L, F_A) < 1e-10


def test_reference_lagrangians_direct():
    for text in ("(1/6)*(v + x^3)^(-2)", "(-1/2)*(3*v + x^3)^(2/3)"):
        assert euler_lagrange_residual(parse_phase(text), F_A) < 1e-10


def test_wrong_lagrangian_fails():
    assert euler_lagrange_residual(parse_phase("(v + x^3)^(-3)"), F_A) > 1e-3


def test_second_velocity_derivative_recovers_multiplier():
    R = multiplier("3*v + x^3", Fraction(-4, 3))
    back = lagrangian_from_multiplier(R).d2v()
    assert back == R


@given(
    st.fractions(min_value=-3, max_value=3, max_denominator=4).filter(lambda r: r not in (-1, -2)),
    st.fractions(min_value=Fraction(1, 2), max_value=3, max_denominator=3),
)
def test_roundtrip_any_exponent(rho, a):
    R = PowerForm(1, a, xy("x^2 + 1"), rho)
    assert lagrangian_from_multiplier(R).d2v() == R


@pytest.mark.parametrize("rho", [-1, -2])
def test_logarithmic_exponents_rejected(rho):
    with pytest.raises(PreconditionError):
        lagrangian_from_multiplier(PowerForm(1, 1, xy("x"), rho))


def test_multiplier_must_be_single_factor():
    R = build_multiplier(
        [DarbouxPair(xy("v + x^3"), xy("-(x^2)")), DarbouxPair(xy("3*v + x^3"), xy("-3*x^2"))], [-4, 1]
    )
    with pytest.raises(PreconditionError):
        power_form_from_multiplier(R)


def test_energy_rational_identity():
    E = energy(parse_phase("(v + x^3)^(-2)"))
    target = parse_phase("-(3*v + x^3)/(v + x^3)^3")
    rng = random.Random(1)
    for _ in range(20):
        x, v = rng.uniform(0.2, 1.5), rng.uniform(0.2, 1.5)
        assert evaluate(E, {"x": x, "v": v}) == pytest.approx(evaluate(target, {"x": x, "v": v}), rel=1e-13)


def test_energy_conserved_along_flow():
    L = lagrangian_from_multiplier(multiplier("v + x^3", -4))
    E = energy(L)
    ode = lambda t, y: [y[1], F_A.evaluate(tuple(y))]
    tr = integrate_ode(ode, 0.0, [0.5, 0.1], 2.0, rtol=1e-9, atol=1e-12)
    drift = conservation_residual(lambda x, v: evaluate(E, {"x": x, "v": v}), tr)
    assert drift < 1e-6


def test_helmholtz_matches_multiplier_pde(gamma):
    R = multiplier("v + x^3", -4)
    assert helmholtz_residual_1d(R, F_A) < 1e-12
    assert jm_residual(build_multiplier([DarbouxPair(xy("v + x^3"), xy("-(x^2)"))], [-4]), gamma) < 1e-12
    assert helmholtz_residual_1d(multiplier("v + x^3", -3), F_A) > 1e-3


def test_free_particle():
    L = lagrangian_from_multiplier(free_particle())
    assert L.to_expr() is not None
    assert euler_lagrange_residual(L, Poly.zero(2)) < 1e-14
    assert L(0.3, 2.0) == pytest.approx(2.0)


def test_power_form_json_roundtrip():
    R = PowerForm(Fraction(1, 6), 3, xy("x^3"), Fraction(2, 3))
    assert PowerForm.from_json(R.to_json()) == R
