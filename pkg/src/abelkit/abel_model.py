"""Abel equations of the first and second kind and what can be done with them
symbolically: kind conversion, the affine gauge action, canonical forms,
Liouville invariants, classification, and quadrature solvers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .config import SETTINGS
from .errors import (
    AccuracyError,
    BlowUpError,
    DomainError,
    MixedTypeError,
    NotProperAbelError,
    PreconditionError,
)
from .expr import (
    ONE,
    T,
    ZERO,
    Const,
    as_expr,
    constant_value,
    differentiate,
    eval_scalar,
    is_zero,
    parse,
    power,
    sample_values,
    substitute,
    unparse,
)
from .numerics import Primitive, quad_adaptive, root_bracketed

# ---------------------------------------------------------------------------
# data model


@dataclass(frozen=True)
class AbelFirstKind:
    """``x' = A0 + A1 x + ... + An x^n`` with coefficients in ``t``.

    ``variable`` is a label only: Liénard reductions set it to ``"x"`` to
    record that the independent variable is the Liénard space variable; the
    coefficient trees always use ``t``.
    """

    coeffs: tuple
    variable: str = "t"
    interval: tuple | None = None

    def __post_init__(self):
        cs = tuple(as_expr(c) for c in self.coeffs)
        if len(cs) < 3:
            raise ValueError("an Abel-type equation needs at least A0, A1, A2")
        object.__setattr__(self, "coeffs", cs)

    @classmethod
    def from_strings(cls, *texts, interval=None):
        return cls(tuple(parse(s) for s in texts), interval=interval)

    @classmethod
    def riccati(cls, c0, c1, c2, interval=None):
        return cls((as_expr(c0), as_expr(c1), as_expr(c2)), interval=interval)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def A(self, i):
        return self.coeffs[i] if i < len(self.coeffs) else ZERO

    def cubic(self):
        """Coefficients padded/checked to the classical length four."""
        if self.degree > 3:
            raise PreconditionError("operation defined for degree <= 3 only")
        return tuple(self.A(i) for i in range(4))

    def rhs(self, t, x):
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + eval_scalar(c, t)
        return acc

    def ode(self):
        """Right-hand side in the ``(t, y)`` array form used by the integrator."""
        return lambda t, y: [self.rhs(t, y[0])]

    def check_kw(self):
        return {"interval": self.interval}

    def is_proper(self):
        return not is_zero(self.coeffs[-1], **self.check_kw())

    def to_json(self):
        names = [f"A{i}" for i in range(len(self.coeffs))]
        out = {"kind": "abel1", "coeffs": {n: unparse(c) for n, c in zip(names, self.coeffs)}}
        if self.degree == 2:
            out["kind"] = "riccati"
        if self.interval is not None:
            out["interval"] = list(self.interval)
        if self.variable != "t":
            out["independent_variable"] = self.variable
        return out


@dataclass(frozen=True)
class AbelSecondKind:
    """``(y + f) y' = B0 + B1 y + B2 y^2 + B3 y^3``."""

    f: object
    B: tuple
    interval: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "f", as_expr(self.f))
        bs = tuple(as_expr(b) for b in self.B)
        if len(bs) != 4:
            raise ValueError("second-kind equations carry exactly B0..B3")
        object.__setattr__(self, "B", bs)

    def rhs(self, t, y):
        poly = sum(eval_scalar(b, t) * y**i for i, b in enumerate(self.B))
        return poly / (y + eval_scalar(self.f, t))

    def to_json(self):
        out = {"kind": "abel2", "coeffs": {"f": unparse(self.f)}}
        out["coeffs"].update({f"B{i}": unparse(b) for i, b in enumerate(self.B)})
        if self.interval is not None:
            out["interval"] = list(self.interval)
        return out


@dataclass(frozen=True)
class Gauge:
    """Affine change of dependent variable acting by substitution ``x = alpha*xbar + beta``.

    An old solution ``x(t)`` corresponds to ``xbar = (x - beta)/alpha``.
    """

    alpha: object = ONE
    beta: object = ZERO

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_expr(self.alpha))
        object.__setattr__(self, "beta", as_expr(self.beta))

    @classmethod
    def identity(cls):
        return cls(ONE, ZERO)

    def map_solution(self, t, x):
        return (x - eval_scalar(self.beta, t)) / eval_scalar(self.alpha, t)

    def to_json(self):
        return {"alpha": unparse(self.alpha), "beta": unparse(self.beta)}


def gauge_compose(g2, g1):
    """Gauge equal to applying ``g1`` first and then ``g2``."""
    return Gauge(g1.alpha * g2.alpha, g1.alpha * g2.beta + g1.beta)


def gauge_invert(g):
    return Gauge(1 / g.alpha, -(g.beta / g.alpha))


# ---------------------------------------------------------------------------
# conversions


def second_to_first(eq):
    """Reduce a second-kind equation with ``x = 1/(y + f)``."""
    f = eq.f
    B0, B1, B2, B3 = eq.B
    A0 = -B3
    A1 = 3 * B3 * f - B2
    A2 = -differentiate(f) - 3 * B3 * power(f, 2) + 2 * f * B2 - B1
    A3 = power(f, 3) * B3 - power(f, 2) * B2 + f * B1 - B0
    return AbelFirstKind((A0, A1, A2, A3), interval=eq.interval)


def lienard_to_abel(fx, gx):
    """First-kind equation ``u' = f u^2 + g u^3`` of ``x'' + f(x) x' + g(x) = 0``.

    ``fx``/``gx`` are expressions (or strings) in ``x``; the result uses ``t``
    internally and is labelled with independent variable ``"x"``.
    """
    if isinstance(fx, str):
        fx = parse(fx, ("x",))
    if isinstance(gx, str):
        gx = parse(gx, ("x",))
    f = substitute(as_expr(fx), {"x": T})
    g = substitute(as_expr(gx), {"x": T})
    # xi xi' = -f xi - g is second kind with B0 = -g, B1 = -f
    first = second_to_first(AbelSecondKind(ZERO, (-g, -f, ZERO, ZERO)))
    return AbelFirstKind(first.coeffs, variable="x")


def milne_pinney():
    """The autonomous dissipative Milne-Pinney reduction ``y (y' + 1) = 1/t^3``."""
    return AbelSecondKind(ZERO, (parse("1/t^3"), Const(Fraction(-1)), ZERO, ZERO))


# ---------------------------------------------------------------------------
# gauge action


def _alpha_check(alpha, interval):
    for t, (a,) in sample_values([alpha], interval=interval):
        if abs(a) <= SETTINGS.tol:
            raise PreconditionError(f"gauge alpha numerically zero at t={t:.6g}")


def gauge_transform(eq, g, check=True):
    """Coefficients of the equation satisfied by ``xbar`` where ``x = alpha*xbar + beta``."""
    A0, A1, A2, A3 = eq.cubic()
    a, b = g.alpha, g.beta
    if check:
        _alpha_check(a, eq.interval)
    nA3 = A3 * power(a, 2)
    nA2 = a * (3 * A3 * b + A2)
    nA1 = 3 * A3 * power(b, 2) + 2 * A2 * b + A1 - differentiate(a) / a
    nA0 = (A3 * power(b, 3) + A2 * power(b, 2) + A1 * b + A0 - differentiate(b)) / a
    return AbelFirstKind((nA0, nA1, nA2, nA3), eq.variable, eq.interval)


def _require_proper(eq):
    A3 = eq.cubic()[3]
    for t, (a3,) in sample_values([A3], interval=eq.interval):
        if abs(a3) <= SETTINGS.tol:
            raise NotProperAbelError(f"A3 numerically zero at t={t:.6g}")


def canonical_shift(eq):
    """Translate away ``A2``.  Returns ``(equation, gauge)``."""
    _require_proper(eq)
    A0, A1, A2, A3 = eq.cubic()
    kw = eq.check_kw()
    if is_zero(A2, **kw):
        return AbelFirstKind((A0, A1, ZERO, A3), eq.variable, eq.interval), Gauge.identity()
    g = Gauge(ONE, -(A2 / (3 * A3)))
    out = gauge_transform(eq, g)
    if not is_zero(out.coeffs[2], **kw):
        raise AccuracyError("shifted A2 did not vanish numerically")
    c = out.coeffs
    return AbelFirstKind((c[0], c[1], ZERO, c[3]), eq.variable, eq.interval), g


# ---------------------------------------------------------------------------
# classification


RICCATI = "Riccati"
BERNOULLI = "Bernoulli"
SEPARABLE = "Separable"
SOLVABLE_TWO_DIM = "SolvableTwoDim"
CANONICAL_I = "CanonicalI"
CANONICAL_II = "CanonicalII"
GENERIC = "Generic"


@dataclass(frozen=True)
class Classification:
    kind: str
    mu: float | None = None
    h: object = None
    constants: tuple | None = None

    def to_json(self):
        out = {"class": self.kind}
        if self.mu is not None:
            out["mu"] = self.mu
        if self.h is not None:
            out["h"] = unparse(self.h)
        if self.constants is not None:
            out["constants"] = list(self.constants)
        return out


def _require_nonvanishing(A0, interval):
    pts = sample_values([A0], interval=interval)
    for t, (a0,) in pts:
        if abs(a0) <= SETTINGS.tol:
            raise MixedTypeError(f"shifted A0 vanishes at t={t:.6g} but not identically", t)
    # a sign change between neighbouring samples of one connected sampling
    # component means a zero in between
    key = (lambda t: 0) if interval is not None else (lambda t: t > 0)
    pts = sorted(pts)
    for (t1, (a1,)), (t2, (a2,)) in zip(pts, pts[1:]):
        if key(t1) == key(t2) and a1 * a2 < 0:
            f = lambda t: eval_scalar(A0, t)
            try:
                t = root_bracketed(f, t1, t2)
            except (DomainError, PreconditionError):
                t = 0.5 * (t1 + t2)
            raise MixedTypeError(f"shifted A0 changes sign near t={t:.6g}", t)


def canonical_form(eq):
    """Reduce a proper Abel equation to ``x' = A1 x + A3 x^3`` or ``x' = 1 + A1 x + A3 x^3``.

    Returns ``(Classification, equation, [gauges applied in order])``.
    """
    shifted, g_shift = canonical_shift(eq)
    kw = eq.check_kw()
    A0 = shifted.coeffs[0]
    if is_zero(A0, **kw):
        return Classification(CANONICAL_I), shifted, [g_shift]
    _require_nonvanishing(A0, eq.interval)
    if isinstance(A0, Const) and A0.value == 1:
        return Classification(CANONICAL_II), shifted, [g_shift]
    g_scale = Gauge(A0, ZERO)
    out = gauge_transform(shifted, g_scale)
    c = out.coeffs
    if not is_zero(c[0] - ONE, **kw):
        raise AccuracyError("scaled constant term is not numerically one")
    result = AbelFirstKind((ONE, c[1], ZERO, c[3]), eq.variable, eq.interval)
    return Classification(CANONICAL_II), result, [g_shift, g_scale]


def separable_parts(eq):
    """``(h, constants)`` with ``A_i = constants[i] * h`` for all i, or ``None``.

    ``h`` is the highest non-vanishing coefficient, so its constant is 1.
    """
    kw = eq.check_kw()
    coeffs = list(eq.coeffs)
    nonzero = [i for i, c in enumerate(coeffs) if not is_zero(c, **kw)]
    if not nonzero:
        return None
    j = nonzero[-1]
    h = coeffs[j]
    ref = None
    for t, vals in sample_values(coeffs, interval=eq.interval):
        if abs(vals[j]) > 1e-3:
            ref = vals
            break
    if ref is None:
        return None
    consts = []
    for i, c in enumerate(coeffs):
        if i not in nonzero:
            consts.append(0.0)
            continue
        k = ref[i] / ref[j]
        if not is_zero(c - k * h, **kw):
            return None
        consts.append(1.0 if i == j else k)
    return h, tuple(consts)


def _snap(value):
    if isinstance(value, Fraction):
        return value
    q = Fraction(value).limit_denominator(1000)
    return q if abs(float(q) - value) <= 1e-12 * max(1.0, abs(value)) else Fraction(value)


def classify(eq):
    """Decision order: Riccati, Bernoulli, Separable, SolvableTwoDim, Generic."""
    A0, A1, A2, A3 = eq.cubic()
    kw = eq.check_kw()
    if is_zero(A3, **kw):
        return Classification(RICCATI)
    if is_zero(A0, **kw) and is_zero(A2, **kw):
        return Classification(BERNOULLI)
    parts = separable_parts(eq)
    if parts is not None:
        return Classification(SEPARABLE, h=parts[0], constants=parts[1])
    mu = constant_value(A2 / (3 * A3), **kw)
    if mu is not None:
        m = Const(_snap(mu))
        if is_zero(A0 - (m * A1 - 2 * power(m, 3) * A3), **kw):
            return Classification(SOLVABLE_TWO_DIM, mu=float(mu))
    return Classification(GENERIC)


# ---------------------------------------------------------------------------
# Liouville invariants

PRINTED = "printed"
TIMES_PHI3 = "timesphi3"
RELATIVE = "relative"
PHI5_VARIANTS = (PRINTED, TIMES_PHI3, RELATIVE)


@dataclass(frozen=True)
class LiouvilleInvariants:
    phi3: object
    phi5: object
    quotient: object
    phi5_variant: str

    def to_json(self):
        return {
            "phi3": unparse(self.phi3),
            "phi5": unparse(self.phi5),
            "quotient": None if self.quotient is None else unparse(self.quotient),
            "phi5_variant": self.phi5_variant,
        }


def phi3_printed(A0, A1, A2, A3):
    return (
        A2 * differentiate(A3)
        - differentiate(A2) * A3
        + 3 * A0 * power(A3, 2)
        - A1 * A2 * A3
        + Fraction(2, 9) * power(A2, 3)
    )


def phi3_relative(A0, A1, A2, A3):
    # derivative term with the sign that makes phi3 scale by alpha^3
    return (
        differentiate(A2) * A3
        - A2 * differentiate(A3)
        + 3 * A0 * power(A3, 2)
        - A1 * A2 * A3
        + Fraction(2, 9) * power(A2, 3)
    )


def liouville_invariants(eq, variant=None):
    """Phi3, Phi5 and the quotient Phi3^5 / Phi5^3.

    ``printed`` and ``timesphi3`` keep the literal bracket
    ``A3' + A2^2/3 - A1 A3`` (the latter multiplies it by Phi3); ``relative``
    uses the sign-corrected relative invariants of weights 3 and 5, the only
    one of the three whose quotient is gauge invariant.
    """
    variant = variant or SETTINGS.phi5_variant
    if variant not in PHI5_VARIANTS:
        raise ValueError(f"unknown Phi5 variant {variant!r}")
    A0, A1, A2, A3 = eq.cubic()
    if variant == RELATIVE:
        p3 = phi3_relative(A0, A1, A2, A3)
        bracket = differentiate(A3) - Fraction(1, 3) * power(A2, 2) + A1 * A3
        p5 = A3 * differentiate(p3) - 3 * bracket * p3
    else:
        p3 = phi3_printed(A0, A1, A2, A3)
        bracket = differentiate(A3) + Fraction(1, 3) * power(A2, 2) - A1 * A3
        if variant == TIMES_PHI3:
            bracket = bracket * p3
        p5 = A3 * differentiate(p3) - 3 * bracket
    if p3 == ZERO:
        quotient = ZERO
    elif p5 == ZERO:
        quotient = None  # Phi5 vanishes identically; the quotient is undefined
    else:
        quotient = power(p3, 5) / power(p5, 3)
    return LiouvilleInvariants(p3, p5, quotient, variant)


# ---------------------------------------------------------------------------
# quadrature solvers


@dataclass
class QuadratureSolution:
    """Solution obtained by quadratures, callable at any reachable ``t``.

    ``blowup`` is a time bracket when a scan up to ``t_end`` found the
    solution escaping; evaluating past it raises :class:`BlowUpError`.
    """

    func: object
    t0: float
    method: str
    blowup: tuple | None = None
    notes: dict = field(default_factory=dict)

    def __call__(self, t):
        tb = self.t_blowup
        if tb is not None and (t - self.t0) * (tb - self.t0) > 0 and abs(t - self.t0) >= abs(tb - self.t0):
            raise BlowUpError("past the blow-up bracket", self.blowup)
        return self.func(t)

    @property
    def t_blowup(self):
        return None if self.blowup is None else 0.5 * (self.blowup[0] + self.blowup[1])


def _scalar(e):
    e = as_expr(e)
    if isinstance(e, Const):
        v = float(e.value)
        return lambda t: v
    return lambda t: eval_scalar(e, t)


def solve_linear(c0, c1, t0, x0, tol=1e-12):
    """``x' = c0 + c1 x`` by the integrating factor and two cumulative quadratures."""
    f0, f1 = _scalar(c0), _scalar(c1)
    t0 = float(t0)
    I1 = Primitive(f1, t0, tol=tol)
    J = Primitive(lambda s: math.exp(-I1(s)) * f0(s), t0, tol=tol)

    def x(t):
        try:
            return math.exp(I1(t)) * (x0 + J(t))
        except DomainError as exc:
            raise AccuracyError(f"quadrature failed: {exc}") from None

    return QuadratureSolution(x, t0, "linear")


def _scan_sign_change(g, t0, tf, n=400):
    ts = np.linspace(t0, tf, n + 1)
    prev_t, prev = ts[0], g(ts[0])
    for t in ts[1:]:
        val = g(t)
        if val * prev <= 0:
            return prev_t, t
        prev_t, prev = t, val
    return None


def solve_bernoulli(eq, t0, x0, t_end=None, tol=1e-12):
    """``x' = A1 x + A3 x^3`` through ``u = 1/x^2``, i.e. ``u' = -2 A1 u - 2 A3``."""
    A0, A1, A2, A3 = eq.cubic()
    kw = eq.check_kw()
    if not (is_zero(A0, **kw) and is_zero(A2, **kw)):
        raise PreconditionError("equation is not of Bernoulli type (A0 = A2 = 0)")
    if x0 == 0:
        raise PreconditionError("x0 = 0 is the trivial equilibrium; u = 1/x^2 is undefined")
    u = solve_linear(-2 * A3, -2 * A1, t0, 1.0 / x0**2, tol=tol)
    sign = 1.0 if x0 > 0 else -1.0

    def x(t):
        ut = u.func(t)
        if ut <= 0:
            raise BlowUpError(f"u = 1/x^2 reached zero before t={t}")
        return sign / math.sqrt(ut)

    sol = QuadratureSolution(x, float(t0), "bernoulli", notes={"u": u})
    if t_end is not None:
        hit = _scan_sign_change(u.func, float(t0), float(t_end))
        if hit is not None:
            root = root_bracketed(u.func, min(hit), max(hit), tol=1e-13)
            sol.blowup = (root - 1e-10, root + 1e-10)
    return sol


def _real_roots(coeffs):
    cs = list(coeffs)
    while cs and cs[-1] == 0:
        cs.pop()
    if len(cs) <= 1:
        return []
    roots = np.roots(cs[::-1])
    return sorted(float(r.real) for r in roots if abs(r.imag) <= 1e-9 * max(1.0, abs(r)))


def solve_separable(eq, t0, x0, t_end=None, tol=1e-12):
    """``x' = h(t) p(x)``: invert ``int_{x0}^{x} 1/p = int_{t0}^{t} h``."""
    parts = separable_parts(eq)
    if parts is None:
        raise PreconditionError("equation is not separable")
    h_expr, consts = parts
    coeffs = [float(c) for c in consts]

    def p(xi):
        acc = 0.0
        for c in reversed(coeffs):
            acc = acc * xi + c
        return acc

    t0 = float(t0)
    x0 = float(x0)
    p0 = p(x0)
    if p0 == 0.0 or abs(p0) <= 1e-14 * max(1.0, abs(x0)):
        return QuadratureSolution(lambda t: x0, t0, "separable", notes={"equilibrium": True})

    roots = _real_roots(coeffs)
    lower = max((r for r in roots if r < x0), default=-math.inf)
    upper = min((r for r in roots if r > x0), default=math.inf)
    deg = len(coeffs) - 1
    while deg > 0 and coeffs[deg] == 0:
        deg -= 1
    H = Primitive(_scalar(h_expr), t0, tol=tol)
    G = Primitive(lambda xi: 1.0 / p(xi), x0, cell=0.0625 * max(1.0, abs(x0)), tol=tol, domain=(lower, upper))
    psign = 1.0 if p0 > 0 else -1.0

    def escape_limit(side):
        # int from x0 to +-infinity of 1/p; finite only for degree >= 2
        if deg < 2:
            return None
        lead = coeffs[deg]
        X = x0

        def integrand(s):
            if s >= 1.0:
                return side / lead if deg == 2 else 0.0
            xi = X + side * s / (1.0 - s)
            return side / (p(xi) * (1.0 - s) ** 2)

        return quad_adaptive(integrand, 0.0, 1.0, tol)

    limits = {1: escape_limit(1) if upper == math.inf else None,
              -1: escape_limit(-1) if lower == -math.inf else None}

    def invert(target):
        if target == 0.0:
            return x0
        side = 1 if target * psign > 0 else -1
        bound = upper if side > 0 else lower
        lim = limits[side]
        if lim is not None and abs(target) >= abs(lim):
            raise BlowUpError("solution escapes to infinity")
        phi = lambda xi: G(xi) - target
        prev = x0
        step = 0.05 * max(1.0, abs(x0))
        for k in range(1, 200):
            if math.isfinite(bound):
                cand = bound - (bound - x0) * 0.5**k
            else:
                cand = x0 + side * step * 2.0**k
            if cand == prev or (math.isfinite(bound) and cand == bound):
                break
            if phi(cand) * (1 if target > 0 else -1) >= 0:
                return root_bracketed(phi, min(prev, cand), max(prev, cand), tol=1e-15)
            prev = cand
        raise PreconditionError(f"trajectory runs into the barrier x={bound}")

    def x(t):
        return invert(H(t))

    sol = QuadratureSolution(x, t0, "separable", notes={"p": coeffs, "h": unparse(h_expr)})
    if t_end is not None:
        for side, lim in limits.items():
            if lim is None:
                continue
            g = lambda t, lim=lim: H(t) - lim
            hit = _scan_sign_change(g, t0, float(t_end))
            if hit is not None:
                root = root_bracketed(g, min(hit), max(hit), tol=1e-13)
                sol.blowup = (root - 1e-10, root + 1e-10)
                break
    return sol
