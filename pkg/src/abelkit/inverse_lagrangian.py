"""From a Jacobi multiplier to a Lagrangian in one degree of freedom, plus the
certificates that the Lagrangian really generates the given dynamics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, PreconditionError
from .expr import Const, Var, as_expr, differentiate, evaluate, phase_sample_stream, power, unparse
from .poly import Poly, fmt_rational


@dataclass(frozen=True)
class PowerForm:
    """``c * (a v + b(x)) ** rho``."""

    c: Fraction
    a: Fraction
    b: Poly
    rho: Fraction

    def __post_init__(self):
        for name in ("c", "a", "rho"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if self.a == 0:
            raise ValueError("the velocity coefficient a must be nonzero")
        if any(m[1] for m in self.b.terms):
            raise ValueError("b must depend on x only")

    @property
    def base(self):
        return Poly.var(1, 2).scale(self.a) + self.b

    def to_expr(self):
        base = self.base.to_expr(("x", "v"))
        return Const(self.c) * power(base, self.rho) if self.c != 1 else power(base, self.rho)

    def __call__(self, x, v):
        return float(evaluate(self.to_expr(), {"x": x, "v": v}))

    def d2v(self):
        """Second velocity derivative, again a power form."""
        return PowerForm(self.c * self.a**2 * self.rho * (self.rho - 1), self.a, self.b, self.rho - 2)

    def to_json(self):
        return {
            "c": fmt_rational(self.c),
            "a": fmt_rational(self.a),
            "b": self.b.to_json(),
            "rho": fmt_rational(self.rho),
        }

    @classmethod
    def from_json(cls, data):
        return cls(Fraction(data["c"]), Fraction(data["a"]), Poly.from_json(data["b"], 2), Fraction(data["rho"]))


def power_form_from_multiplier(R):
    """Single-factor multiplier ``(a v + b(x))^nu`` as a :class:`PowerForm`."""
    if len(R.factors) != 1:
        raise PreconditionError("only single-factor multipliers have a power form")
    base, nu = R.factors[0]
    by_v = base.collect(1)
    if set(by_v) - {0, 1} or 1 not in by_v or by_v[1].degree() != 0:
        raise PreconditionError("multiplier base must be a v + b(x) with constant a")
    return PowerForm(1, by_v[1].constant_term(), by_v.get(0, Poly.zero(2)), nu)


def lagrangian_from_multiplier(R):
    """``L`` with ``d^2 L / dv^2 = R`` and both integration functions set to zero."""
    rho = R.rho
    if rho in (-1, -2):
        raise PreconditionError(f"exponent {rho} integrates to a logarithm")
    scale = R.c / (R.a**2 * (rho + 1) * (rho + 2))
    return PowerForm(scale, R.a, R.b, rho + 2)


def _phase(L):
    return L.to_expr() if isinstance(L, PowerForm) else as_expr(L)


def energy(L):
    """``E = v dL/dv - L``."""
    e = _phase(L)
    return Var("v") * differentiate(e, "v") - e


def _phase_points(exprs, samples, seed, box):
    out = []
    tries = 0
    for x, v in phase_sample_stream(seed, box):
        tries += 1
        if len(out) == samples or tries > 50 * samples:
            break
        env = {"x": x, "v": v}
        try:
            vals = [evaluate(e, env) for e in exprs]
        except DomainError:
            continue
        if all(math.isfinite(val) for val in vals):
            out.append(((x, v), vals))
    if not out:
        raise DomainError("no admissible phase-space sample points")
    return out


def helmholtz_residual_1d(g, F, samples=50, seed=None, box=((0.2, 1.5), (0.2, 1.5))):
    """Max ``|v g_x + F g_v + g F_v|``: ``g`` is a multiplier for ``x'' = F``."""
    g = _phase(g)
    Fv = F.diff(1)
    exprs = [g, differentiate(g, "x"), differentiate(g, "v")]
    worst = 0.0
    for (x, v), (gv, gx, gvv) in _phase_points(exprs, samples, seed, box):
        val = v * gx + F.evaluate((x, v)) * gvv + gv * Fv.evaluate((x, v))
        worst = max(worst, abs(val))
    return worst


def euler_lagrange_residual(L, F, samples=50, seed=None, box=((0.2, 1.5), (0.2, 1.5))):
    """Max ``|L_vv F + L_xv v - L_x|``: zero iff ``x'' = F`` is the Euler-Lagrange equation."""
    e = _phase(L)
    Lx = differentiate(e, "x")
    Lv = differentiate(e, "v")
    exprs = [differentiate(Lv, "v"), differentiate(Lv, "x"), Lx]
    worst = 0.0
    for (x, v), (lvv, lxv, lx) in _phase_points(exprs, samples, seed, box):
        worst = max(worst, abs(lvv * F.evaluate((x, v)) + lxv * v - lx))
    return worst


def free_particle():
    """``R = 1`` as a power form."""
    return PowerForm(1, 1, Poly.zero(2), 0)


def summary_json(R, L):
    return {
        "multiplier": R.to_json(),
        "lagrangian": L.to_json(),
        "lagrangian_expr": unparse(L.to_expr()),
        "energy": unparse(energy(L)),
    }

