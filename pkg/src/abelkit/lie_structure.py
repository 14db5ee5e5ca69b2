"""Polynomial vector fields on the line, their brackets and normalizers,
the Riccati superposition rule and the SL(2) action on Riccati equations."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .abel_model import AbelFirstKind
from .config import SETTINGS
from .errors import ClosureError, PreconditionError
from .expr import as_expr, differentiate, eval_scalar, power, sample_values
from .poly import PolyVF1D, nullspace, rank, rref, solve_linear_system


class _PointAtInfinity:
    """The point added to the real line to make Möbius maps total."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_PointAtInfinity, ())


INF = _PointAtInfinity()


def is_inf(x):
    return x is INF


# ---------------------------------------------------------------------------
# spans of vector fields


@dataclass(frozen=True)
class VSpan:
    basis: tuple

    def __post_init__(self):
        basis = tuple(self.basis)
        object.__setattr__(self, "basis", basis)
        n = self.width
        if rank([b.padded(n) for b in basis], n) != len(basis):
            raise ValueError("span basis is linearly dependent")

    @property
    def width(self):
        return max((b.degree + 1 for b in self.basis), default=0)

    @property
    def dim(self):
        return len(self.basis)

    @property
    def max_degree(self):
        return max((b.degree for b in self.basis), default=-1)

    def to_json(self):
        return [b.to_json() for b in self.basis]


def monomial_span(*degrees):
    return VSpan(tuple(PolyVF1D.monomial(n) for n in degrees))


V_ABEL = monomial_span(0, 1, 2, 3)
W_ABEL = monomial_span(0, 1)
V_RICCATI = monomial_span(0, 1, 2)


def bracket_1d(f, g):
    """``[f d/dx, g d/dx] = (f g' - g f') d/dx``."""
    return f * g.derivative() - g * f.derivative()


def in_span(vf, span):
    """Coordinates of ``vf`` in the span's basis, or ``None``."""
    if vf.is_zero():
        return [Fraction(0)] * span.dim
    n = max(span.width, vf.degree + 1)
    cols = [b.padded(n) for b in span.basis]
    rows = [[col[m] for col in cols] for m in range(n)]
    sol = solve_linear_system(rows, vf.padded(n), span.dim)
    return None if sol is None else sol[0]


def normalizer_in_degree(span, max_deg):
    """Fields ``f d/dx`` with ``deg f <= max_deg`` whose bracket with every basis
    element stays in ``span``, as a basis in reduced echelon form."""
    if max_deg < span.max_degree:
        raise PreconditionError("max_deg must be at least the span's top degree")
    nf = max_deg + 1
    k = span.dim
    nb = len(span.basis)
    ncols = nf + nb * k
    width = 2 * max_deg + 1
    rows = []
    for bi, b in enumerate(span.basis):
        # bracket of each monomial x^j d/dx with b, as the column for unknown f_j
        cols = [bracket_1d(PolyVF1D.monomial(j), b).padded(width) for j in range(nf)]
        spans = [s.padded(width) for s in span.basis]
        for m in range(width):
            row = [Fraction(0)] * ncols
            for j in range(nf):
                row[j] = cols[j][m]
            for i in range(k):
                row[nf + bi * k + i] = -spans[i][m]
            rows.append(row)
    sols = nullspace(rows, ncols)
    projected = [v[:nf] for v in sols if any(v[:nf])]
    if not projected:
        return VSpan(())
    red, _ = rref(projected, nf)
    return VSpan(tuple(PolyVF1D(r) for r in red))


def is_closed(span):
    """Exact check that every pairwise bracket stays in the span."""
    for i, a in enumerate(span.basis):
        for b in span.basis[i + 1 :]:
            if in_span(bracket_1d(a, b), span) is None:
                return False
    return True


def solvable_pair(mu):
    """``Y1 = (mu + x) d/dx`` and ``Y2 = (-2 mu^3 + 3 mu x^2 + x^3) d/dx``."""
    mu = Fraction(mu)
    y1 = PolyVF1D([mu, 1])
    y2 = PolyVF1D([-2 * mu**3, 0, 3 * mu, 1])
    return y1, y2


def check_two_dim_subalgebra(mu):
    """Structure constants ``(a, b)`` with ``[Y1, Y2] = a Y1 + b Y2``."""
    y1, y2 = solvable_pair(mu)
    coords = in_span(bracket_1d(y1, y2), VSpan((y1, y2)))
    if coords is None:
        raise ClosureError(f"bracket of the mu={mu} pair leaves their span")
    return tuple(coords)


# ---------------------------------------------------------------------------
# superposition and Möbius maps


def riccati_superposition(x1, x2, x3, k):
    """General solution value from three particular ones and the constant ``k``.

    ``k`` may be :data:`INF`; a vanishing denominator yields :data:`INF`.
    """
    if is_inf(k):
        return x1
    num = k * x1 * (x3 - x2) + x2 * (x1 - x3)
    den = k * (x3 - x2) + (x1 - x3)
    if den == 0:
        return INF
    return num / den


def mobius_apply(A, x, tol=1e-12):
    """Action of ``A = ((a, b), (c, d))`` with unit determinant on the extended line."""
    (a, b), (c, d) = A
    if abs(a * d - b * c - 1) > tol:
        raise PreconditionError(f"determinant {a * d - b * c} is not 1")
    if is_inf(x):
        return INF if c == 0 else a / c
    den = c * x + d
    if den == 0:
        return INF
    return (a * x + b) / den


@dataclass(frozen=True)
class Mobius:
    """Curve ``t -> ((a, b), (c, d))`` in SL(2, R) with expression entries."""

    a: object
    b: object
    c: object
    d: object

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, as_expr(getattr(self, name)))

    def det(self):
        return self.a * self.d - self.b * self.c

    def check(self, interval=None, tol=None):
        tol = SETTINGS.tol if tol is None else tol
        for t, (v,) in sample_values([self.det()], interval=interval):
            if abs(v - 1) > tol:
                raise PreconditionError(f"det = {v} at t={t:.6g}, not 1")

    def at(self, t):
        return (
            (eval_scalar(self.a, t), eval_scalar(self.b, t)),
            (eval_scalar(self.c, t), eval_scalar(self.d, t)),
        )

    def __matmul__(self, other):
        return Mobius(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )


def sl2_coefficient_action(A, riccati, check=True):
    """Riccati equation satisfied by ``xbar(t) = Phi(A(t), x(t))``."""
    if riccati.degree != 2:
        raise PreconditionError("the SL(2) action is defined on Riccati equations")
    if check:
        A.check(riccati.interval)
    c0, c1, c2 = riccati.coeffs
    al, be, ga, de = A.a, A.b, A.c, A.d
    dal, dbe, dga, dde = (differentiate(e) for e in (al, be, ga, de))
    n2 = power(de, 2) * c2 - de * ga * c1 + power(ga, 2) * c0 + ga * dde - de * dga
    n1 = (
        -2 * be * de * c2
        + (al * de + be * ga) * c1
        - 2 * al * ga * c0
        + de * dal
        - al * dde
        + be * dga
        - ga * dbe
    )
    n0 = power(be, 2) * c2 - al * be * c1 + power(al, 2) * c0 + al * dbe - be * dal
    return AbelFirstKind((n0, n1, n2), riccati.variable, riccati.interval)
