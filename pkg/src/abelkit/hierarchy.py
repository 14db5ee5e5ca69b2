"""The operator ``D = d/dt + x^2`` on jet polynomials and the equations of the
hierarchy it generates."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import PreconditionError
from .expr import Const, as_expr, parse, unparse
from .poly import JetPoly, Poly


def total_derivative(p):
    """``d/dt`` on jets: each ``u_j`` goes to ``u_{j+1}``; the order rises by one."""
    q = p.raise_order(1)
    out = Poly.zero(q.nvars)
    for j in range(p.order + 1):
        dj = q.diff(j)
        if dj:
            out = out + dj * JetPoly.u(j + 1, q.order)
    return JetPoly.of(out, q.order)


def abel_operator(p):
    """``D p = dp/dt + x^2 p``."""
    q = p.raise_order(1)
    x2 = JetPoly.u(0, q.order) ** 2
    return JetPoly.of(total_derivative(p) + x2 * q, q.order)


def abel_power(n):
    """``D^n x``."""
    p = JetPoly.u(0, 0)
    for _ in range(n):
        p = abel_operator(p)
    return p


@dataclass(frozen=True)
class HierarchyEquation:
    """``p0 D^n x + p1 D^(n-1) x + ... + pn x + p(n+1) = 0``."""

    order: int
    terms: tuple

    def __post_init__(self):
        if len(self.terms) != self.order + 2:
            raise ValueError("a hierarchy equation of order n carries n + 2 terms")
        if any(j.order > self.order for _, j in self.terms):
            raise ValueError("jet order exceeds the equation order")

    @property
    def coefficients(self):
        return tuple(c for c, _ in self.terms)

    def is_constant(self):
        return all(isinstance(c, Const) for c in self.coefficients)

    def jet(self):
        """The left side as one jet polynomial (constant coefficients only)."""
        if not self.is_constant():
            raise PreconditionError("coefficients are not all constant")
        out = Poly.zero(self.order + 1)
        for c, j in self.terms:
            out = out + JetPoly.of(j, self.order).scale(c.value)
        return JetPoly.of(out, self.order)

    def to_json(self):
        return {
            "order": self.order,
            "terms": [{"p": unparse(c), "jet": j.to_json()} for c, j in self.terms],
        }


def build_hierarchy_equation(p, n):
    if n < 1:
        raise ValueError("hierarchy order starts at 1")
    if len(p) != n + 2:
        raise ValueError(f"order {n} needs {n + 2} coefficients, got {len(p)}")
    coeffs = [parse(c) if isinstance(c, str) else as_expr(c) for c in p]
    terms = []
    for j in range(n + 1):
        terms.append((coeffs[j], JetPoly.of(abel_power(n - j), n)))
    terms.append((coeffs[n + 1], JetPoly.of(Poly.const(1, 1), n)))
    return HierarchyEquation(n, tuple(terms))


def to_planar_vf(h):
    """Second-order equation ``c u2 + r(x, u1) = 0`` as ``v d/dx - (r/c) d/dv``.

    Accepts a :class:`HierarchyEquation` of order 2 with constant coefficients
    or an order-2 jet polynomial.
    """
    from .darboux_jm import PlanarVF

    jet = h.jet() if isinstance(h, HierarchyEquation) else h
    if jet.order != 2:
        raise PreconditionError("planar form needs a second-order equation")
    by_u2 = jet.collect(2)
    if set(by_u2) - {0, 1}:
        raise PreconditionError("equation is not linear in the second derivative")
    lead = by_u2.get(1)
    if lead is None or lead.degree() != 0:
        raise PreconditionError("coefficient of the second derivative must be a nonzero constant")
    c = lead.constant_term()
    rest = by_u2.get(0, Poly.zero(3))
    # (x, u1) -> (x, v)
    q = Poly({m[:2]: -coef / c for m, coef in rest.terms.items()}, 2)
    return PlanarVF(Poly.var(1, 2), q)
