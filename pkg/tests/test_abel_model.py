import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from abelkit import abel_model as am
from abelkit.abel_model import (
    AbelFirstKind,
    AbelSecondKind,
    Gauge,
    canonical_form,
    canonical_shift,
    classify,
    gauge_compose,
    gauge_invert,
    gauge_transform,
    lienard_to_abel,
    liouville_invariants,
    milne_pinney,
    second_to_first,
    solve_bernoulli,
    solve_linear,
    solve_separable,
)
from abelkit.config import SETTINGS
from abelkit.errors import BlowUpError, MixedTypeError, NotProperAbelError, PreconditionError
from abelkit.expr import ZERO, eval_scalar, expr_equal_numeric, is_zero, parse, unparse
from abelkit.numerics import integrate_ode, solution_map_residual

from conftest import random_coefficient, random_nonvanishing
from oracles import central_difference, gauge_oracle, second_kind_oracle, trajectory


def abel(*texts):
    return AbelFirstKind.from_strings(*texts)


def random_proper(rng):
    return abel(*(random_coefficient(rng) for _ in range(3)), random_nonvanishing(rng))


def random_gauge(rng):
    return Gauge(parse(random_nonvanishing(rng)), parse(random_coefficient(rng)))


def coeffs_close(e1, e2, tol=1e-8):
    return all(expr_equal_numeric(a, b, tol=tol) for a, b in zip(e1.cubic(), e2.cubic()))


# ---------------------------------------------------------------------------
# gauge action


def test_gauge_matches_substitution_oracle(rng):
    for _ in range(5):
        eq = random_proper(rng)
        g = Gauge(parse(random_nonvanishing(rng)), parse(random_coefficient(rng)))
        mine = gauge_transform(eq, g)
        ref = gauge_oracle(eq.cubic(), g.alpha, g.beta)
        for t in (0.3, 1.1, 2.0, -0.7):
            for c, r in zip(mine.cubic(), ref):
                assert eval_scalar(c, t) == pytest.approx(r(t), rel=1e-10, abs=1e-10)


def test_identity_gauge():
    eq = abel("t", "sin(t)", "1", "2+t^2")
    assert coeffs_close(gauge_transform(eq, Gauge.identity()), eq, tol=1e-14)


def test_zero_alpha_rejected():
    with pytest.raises(PreconditionError):
        gauge_transform(abel("0", "0", "0", "1"), Gauge(parse("t - t"), ZERO))


def test_compose_and_invert():
    g = Gauge(parse("2"), parse("3"))
    inv = gauge_invert(g)
    assert float(inv.alpha.value) == 0.5 and float(inv.beta.value) == -1.5
    c = gauge_compose(Gauge.identity(), g)
    assert expr_equal_numeric(c.alpha, g.alpha) and expr_equal_numeric(c.beta, g.beta)


def test_action_axiom(rng):
    for _ in range(5):
        eq = random_proper(rng)
        g1, g2 = random_gauge(rng), random_gauge(rng)
        lhs = gauge_transform(gauge_transform(eq, g1), g2)
        rhs = gauge_transform(eq, gauge_compose(g2, g1))
        assert coeffs_close(lhs, rhs)


def test_inverse_undoes(rng):
    eq = random_proper(rng)
    g = random_gauge(rng)
    back = gauge_transform(gauge_transform(eq, g), gauge_invert(g))
    assert coeffs_close(back, eq)


def test_solution_mapping_oracle():
    eq = abel("1", "0", "0", "1")
    g = Gauge(parse("1 + (t^2)/2"), parse("t/3 - 1/10"))
    new = gauge_transform(eq, g)
    x0 = 0.2
    src = trajectory(eq.rhs, 0.0, x0, 0.5)
    dst = trajectory(new.rhs, 0.0, g.map_solution(0.0, x0), 0.5)
    assert solution_map_residual(lambda t, x: g.map_solution(t, x[0]), src, dst) < 1e-6


# ---------------------------------------------------------------------------
# canonical forms


def test_shift_examples():
    eq, g = canonical_shift(abel("0", "0", "0", "t"))
    assert unparse(g.beta) == "0" and eq.coeffs[2] == ZERO
    eq, g = canonical_shift(abel("0", "0", "3*t", "t"))
    assert expr_equal_numeric(g.beta, parse("-1"))
    assert is_zero(gauge_transform(abel("0", "0", "3*t", "t"), g).coeffs[2])


def test_shift_A1_uses_one_third(rng):
    for _ in range(5):
        eq = random_proper(rng)
        out, _ = canonical_shift(eq)
        A0, A1, A2, A3 = eq.cubic()
        assert expr_equal_numeric(out.coeffs[1], A1 - A2 * A2 / (3 * A3))


def test_shift_A0_matches_closed_form(rng):
    eq = random_proper(rng)
    out, _ = canonical_shift(eq)
    A0, A1, A2, A3 = eq.cubic()
    from abelkit.expr import differentiate

    closed = A0 - A1 * A2 / (3 * A3) + Fraction(2, 27) * A2**3 / A3**2 + Fraction(1, 3) * differentiate(A2 / A3)
    assert expr_equal_numeric(out.coeffs[0], closed)
    assert expr_equal_numeric(out.coeffs[3], A3)


def test_shift_requires_proper():
    with pytest.raises(NotProperAbelError):
        canonical_shift(abel("1", "0", "1", "0"))


def test_canonical_form_examples():
    cls, eq, gs = canonical_form(abel("0", "0", "0", "1"))
    assert cls.kind == am.CANONICAL_I
    cls, eq, gs = canonical_form(abel("1", "0", "0", "1"))
    assert cls.kind == am.CANONICAL_II and len(gs) == 1
    cls, eq, gs = canonical_form(AbelFirstKind.from_strings("t", "0", "0", "1", interval=(0.5, 3.0)))
    assert cls.kind == am.CANONICAL_II
    assert unparse(eq.coeffs[0]) == "1"
    kw = {"interval": (0.5, 3.0)}
    assert expr_equal_numeric(eq.coeffs[1], parse("-1/t"), **kw)
    assert expr_equal_numeric(eq.coeffs[3], parse("t^2"), **kw)


def test_mixed_type_detected():
    with pytest.raises(MixedTypeError) as info:
        canonical_form(AbelFirstKind.from_strings("t", "0", "0", "1", interval=(-1.0, 1.0)))
    assert info.value.t == pytest.approx(0.0, abs=1e-9)


# ---------------------------------------------------------------------------
# classification


@pytest.mark.parametrize(
    "coeffs, kind",
    [
        (("1", "t", "t^2", "0"), am.RICCATI),
        (("0", "t", "0", "t^2"), am.BERNOULLI),
        (("sin(t)", "2*sin(t)", "0", "5*sin(t)"), am.SEPARABLE),
        (("3*t - 2", "3*t", "3", "1"), am.SOLVABLE_TWO_DIM),
        (("1", "t", "sin(t)", "exp(t)"), am.GENERIC),
    ],
)
def test_classify_examples(coeffs, kind):
    assert classify(abel(*coeffs)).kind == kind


def test_solvable_mu():
    assert classify(abel("3*t - 2", "3*t", "3", "1")).mu == pytest.approx(1.0)


def test_separable_constants():
    c = classify(abel("sin(t)", "2*sin(t)", "0", "5*sin(t)"))
    assert c.constants == pytest.approx((0.2, 0.4, 0.0, 1.0))


@given(
    st.fractions(min_value=-2, max_value=2, max_denominator=4),
    st.fractions(min_value=Fraction(1, 2), max_value=3, max_denominator=4),
    st.fractions(min_value=-2, max_value=2, max_denominator=4),
    st.sampled_from([1, -1]),
)
def test_mu_covariance_under_constant_gauges(mu, a, b, sign):
    # Y = c1(t) Y1 + Y2 with c1 = 2 + t^2
    a = a * sign
    eq = AbelFirstKind(
        (
            parse(f"({mu})*(2 + t^2) - 2*({mu})^3"),
            parse("2 + t^2"),
            parse(f"3*({mu})"),
            parse("1"),
        )
    )
    new = gauge_transform(eq, Gauge(parse(str(a)), parse(str(b))))
    c = classify(new)
    if c.kind == am.BERNOULLI:
        assert (mu + b) == 0
        return
    assert c.kind == am.SOLVABLE_TWO_DIM
    assert c.mu == pytest.approx(float((mu + b) / a), abs=1e-9)


# ---------------------------------------------------------------------------
# Liouville invariants


def _quotient_invariance(variant, rng, cases=20, times=(0.4, 0.9, 1.3, 1.8, 2.4)):
    worst = 0.0
    for _ in range(cases):
        eq = random_proper(rng)
        g = random_gauge(rng)
        q0 = liouville_invariants(eq, variant).quotient
        q1 = liouville_invariants(gauge_transform(eq, g), variant).quotient
        for t in times:
            a, b = eval_scalar(q0, t), eval_scalar(q1, t)
            worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1e-300))
    return worst


def test_variant_selection():
    """Only the configured variant keeps Phi3^5/Phi5^3 invariant."""
    results = {v: _quotient_invariance(v, random.Random(5)) for v in am.PHI5_VARIANTS}
    passing = [v for v, err in results.items() if err < 1e-5]
    assert passing == [SETTINGS.phi5_variant], results


def test_phi3_vanishes_on_first_canonical_orbit(rng):
    eq = abel("0", "t", "0", "2 + sin(t)")
    assert liouville_invariants(eq).phi3 == ZERO or is_zero(liouville_invariants(eq).phi3)
    for _ in range(3):
        moved = gauge_transform(eq, random_gauge(rng))
        assert is_zero(liouville_invariants(moved).phi3)


def test_phi3_constant_riccati_embedding():
    inv = liouville_invariants(abel("2", "5", "0", "1/3"), am.PRINTED)
    assert expr_equal_numeric(inv.phi3, parse("3*2*(1/3)^2"))


def test_phi3_scales_with_alpha_cubed(rng):
    eq = random_proper(rng)
    g = random_gauge(rng)
    p = liouville_invariants(eq).phi3
    q = liouville_invariants(gauge_transform(eq, g)).phi3
    assert expr_equal_numeric(q, p * g.alpha**3, tol=1e-8)


def test_unknown_variant():
    with pytest.raises(ValueError):
        liouville_invariants(abel("0", "0", "0", "1"), "nope")


# ---------------------------------------------------------------------------
# conversions


def test_second_to_first_milne_pinney():
    eq = second_to_first(milne_pinney())
    assert [unparse(c) for c in eq.coeffs[:3]] == ["0", "0", "1"]
    assert expr_equal_numeric(eq.coeffs[3], parse("-1/t^3"))


def test_second_to_first_constant_B0():
    eq = second_to_first(AbelSecondKind(ZERO, (parse("sin(t)"), ZERO, ZERO, ZERO)))
    assert [unparse(c) for c in eq.coeffs[:3]] == ["0", "0", "0"]
    assert expr_equal_numeric(eq.coeffs[3], parse("-sin(t)"))


def test_second_to_first_symbolic_oracle(rng):
    for _ in range(3):
        f = random_coefficient(rng)
        B = [random_coefficient(rng) for _ in range(4)]
        mine = second_to_first(AbelSecondKind(parse(f), tuple(parse(b) for b in B)))
        ref = second_kind_oracle(f, B)
        for t in (0.5, 1.5, -1.2):
            for c, r in zip(mine.coeffs, ref):
                assert eval_scalar(c, t) == pytest.approx(r(t), rel=1e-10, abs=1e-10)


def test_second_to_first_numerical_oracle():
    sk = AbelSecondKind(parse("t/4"), (parse("1"), parse("-t/2"), parse("1/3"), parse("1/5")))
    fk = second_to_first(sk)
    y = trajectory(sk.rhs, 1.0, 2.0, 1.5)
    x = trajectory(fk.rhs, 1.0, 1 / (2.0 + 0.25), 1.5)
    mapped = lambda t, yy: 1.0 / (yy[0] + eval_scalar(sk.f, t))
    assert solution_map_residual(mapped, y, x) < 1e-6


def test_lienard_examples():
    eq = lienard_to_abel("0", "0")
    assert all(c == ZERO for c in eq.coeffs)
    eq = lienard_to_abel("-1", "x^2")
    assert eq.variable == "x"
    assert [unparse(c) for c in eq.coeffs[:2]] == ["0", "0"]
    assert expr_equal_numeric(eq.coeffs[2], parse("-1"))
    assert expr_equal_numeric(eq.coeffs[3], parse("-t^2"))


def test_lienard_trajectory_oracle():
    eq = lienard_to_abel("x", "1")
    tr = integrate_ode(lambda t, y: [y[1], -y[0] * y[1] - 1], 0.0, [0.0, 1.0], 0.6, rtol=1e-12, atol=1e-14)
    worst = 0.0
    h = 1e-4
    for t in tr.grid(41)[1:-1]:
        x, v = tr(t)
        assert v > 0
        xp, vp = tr(t + h)
        xm, vm = tr(t - h)
        dudx = (1 / vp - 1 / vm) / (xp - xm)
        worst = max(worst, abs(dudx - eq.rhs(x, 1 / v)))
    assert worst < 1e-5


# ---------------------------------------------------------------------------
# quadrature solvers


def test_bernoulli_closed_form():
    sol = solve_bernoulli(abel("0", "0", "0", "-1"), 0.0, 1.0)
    for t in [0.1 * k for k in range(21)]:
        assert sol(t) == pytest.approx(1 / math.sqrt(1 + 2 * t), abs=1e-8)


def test_bernoulli_linear_decay():
    sol = solve_bernoulli(abel("0", "-1", "0", "0"), 0.5, 3.0)
    for t in (0.5, 1.0, 2.0):
        assert sol(t) == pytest.approx(3.0 * math.exp(-(t - 0.5)), abs=1e-8)


def test_bernoulli_blowup_bracket():
    # x' = x^3, x(0) = 1 blows up at t = 1/2
    sol = solve_bernoulli(abel("0", "0", "0", "1"), 0.0, 1.0, t_end=1.0)
    lo, hi = sol.blowup
    assert lo <= 0.5 <= hi
    with pytest.raises(BlowUpError):
        sol(0.7)


def test_bernoulli_preconditions():
    with pytest.raises(PreconditionError):
        solve_bernoulli(abel("1", "0", "0", "1"), 0.0, 1.0)
    with pytest.raises(PreconditionError):
        solve_bernoulli(abel("0", "0", "0", "1"), 0.0, 0.0)


def test_bernoulli_residual():
    eq = abel("0", "sin(t)", "0", "-1 - (t^2)/4")
    sol = solve_bernoulli(eq, 0.0, -0.8)
    for t in [0.05 * k for k in range(1, 40)]:
        assert abs(central_difference(sol, t, 1e-4) - eq.rhs(t, sol(t))) < 1e-6


def test_linear_examples():
    assert solve_linear(ZERO, ZERO, 0.0, 2.5)(1.7) == 2.5
    sol = solve_linear(parse("1"), ZERO, 0.0, 0.0)
    assert sol(0.8) == pytest.approx(0.8, abs=1e-10)
    c0, c1 = parse("sin(t)"), parse("t")
    sol = solve_linear(c0, c1, 0.0, 0.3)
    for t in [0.02 * k for k in range(1, 50)]:
        rhs = eval_scalar(c0, t) + eval_scalar(c1, t) * sol(t)
        assert abs(central_difference(sol, t, 1e-4) - rhs) < 1e-7


def test_separable_examples():
    sol = solve_separable(abel("0", "1", "0", "0"), 0.0, 0.7)
    for t in (0.5, 1.0, -0.4):
        assert sol(t) == pytest.approx(0.7 * math.exp(t), abs=1e-8)
    sol = solve_separable(abel("0", "0", "1", "0"), 0.0, 1.0)
    for t in [0.1 * k for k in range(10)]:
        assert sol(t) == pytest.approx(1 / (1 - t), abs=1e-7)


def test_separable_equilibrium_and_escape():
    eq = abel("-1", "0", "0", "1")  # p(x) = x^3 - 1
    assert solve_separable(eq, 0.0, 1.0)(2.0) == 1.0
    sol = solve_separable(eq, 0.0, 1.5, t_end=2.0)
    assert sol.blowup is not None
    tb = sol.t_blowup
    assert abs(sol(0.99 * tb)) > 5


def test_separable_cubic_residual():
    eq = abel("(1/2)*(1+t^2)", "(-1)*(1+t^2)", "(1/3)*(1+t^2)", "(-1/4)*(1+t^2)")
    sol = solve_separable(eq, 0.0, 0.4)
    for t in [0.05 * k for k in range(1, 30)]:
        assert abs(central_difference(sol, t, 1e-4) - eq.rhs(t, sol(t))) < 1e-6


def test_separable_rejects_nonseparable():
    with pytest.raises(PreconditionError):
        solve_separable(abel("1", "t", "0", "1"), 0.0, 1.0)


def test_quotient_undefined_when_phi5_vanishes():
    inv = liouville_invariants(abel("1", "0", "0", "1"))
    assert inv.phi5 == ZERO
    assert inv.quotient is None
    assert inv.to_json()["quotient"] is None
