"""Numerical core: adaptive ODE integration, quadrature, root finding and the
residual harnesses every other module uses for cross-validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.optimize import brentq

from .config import SETTINGS
from .errors import AccuracyError, AbelkitError, DomainError, PreconditionError

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4
# continuous extension of the pair: y(t + s h) = y + h * K^T P [s, s^2, s^3, s^4]
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

COMPLETED = "completed"
BLOWUP = "blowup"
DOMAIN_ERROR = "domain_error"


@dataclass
class Trajectory:
    """Accepted steps of an integration with dense output.

    Between steps the state comes from the pair's own quartic continuous
    extension (``stages`` holds each step's start, size and stage
    derivatives); without stages it falls back to cubic Hermite.

    ``status`` is one of ``"completed"``, ``"blowup"`` (``bracket`` holds the
    time interval containing the singularity) or ``"domain_error"``
    (``error_t`` is where the right-hand side stopped being defined).
    """

    ts: np.ndarray
    ys: np.ndarray
    fs: np.ndarray
    status: str = COMPLETED
    bracket: tuple | None = None
    error_t: float | None = None
    stats: dict = field(default_factory=dict)
    stages: list | None = None

    @property
    def t0(self):
        return float(self.ts[0])

    @property
    def t_end(self):
        return float(self.ts[-1])

    @property
    def dim(self):
        return self.ys.shape[1]

    def __len__(self):
        return len(self.ts)

    def _locate(self, t):
        ts = self.ts
        if t < ts[0] or t > ts[-1]:
            raise ValueError(f"t={t} outside the integrated window [{ts[0]}, {ts[-1]}]")
        i = int(np.searchsorted(ts, t, side="right")) - 1
        return min(i, len(ts) - 2)

    def __call__(self, t):
        """State at time ``t`` (exact at step endpoints)."""
        t = float(t)
        if len(self.ts) == 1:
            if t != self.ts[0]:
                raise ValueError("trajectory has a single sample")
            return self.ys[0].copy()
        i = self._locate(t)
        t0, t1 = self.ts[i], self.ts[i + 1]
        if t == t0:
            return self.ys[i].copy()
        if t == t1:
            return self.ys[i + 1].copy()
        if self.stages is not None:
            start, h, ystart, K = self.stages[i]
            s = (t - start) / h
            Q = K.T @ _P
            return ystart + h * (Q @ np.array([s, s * s, s**3, s**4]))
        h = t1 - t0
        s = (t - t0) / h
        s2, s3 = s * s, s * s * s
        h00 = 2 * s3 - 3 * s2 + 1
        h10 = s3 - 2 * s2 + s
        h01 = -2 * s3 + 3 * s2
        h11 = s3 - s2
        return h00 * self.ys[i] + h10 * h * self.fs[i] + h01 * self.ys[i + 1] + h11 * h * self.fs[i + 1]

    def derivative(self, t):
        t = float(t)
        i = self._locate(t)
        if self.stages is not None:
            start, h, _, K = self.stages[i]
            s = (t - start) / h
            return (K.T @ _P) @ np.array([1.0, 2 * s, 3 * s * s, 4 * s**3])
        t0, t1 = self.ts[i], self.ts[i + 1]
        h = t1 - t0
        s = (t - t0) / h
        s2 = s * s
        d00 = (6 * s2 - 6 * s) / h
        d10 = 3 * s2 - 4 * s + 1
        d01 = (-6 * s2 + 6 * s) / h
        d11 = 3 * s2 - 2 * s
        return d00 * self.ys[i] + d10 * self.fs[i] + d01 * self.ys[i + 1] + d11 * self.fs[i + 1]

    def grid(self, n, lo=None, hi=None):
        lo = self.t0 if lo is None else lo
        hi = self.t_end if hi is None else hi
        return np.linspace(lo, hi, n)

    def to_csv(self, names=None, extra_times=()):
        """CSV text: header ``t,x[,v]``, accepted steps plus ``extra_times`` rows."""
        names = names or (["x", "v"] if self.dim == 2 else [f"y{i}" for i in range(self.dim)])
        if self.dim == 1:
            names = names[:1]
        times = sorted(set(float(t) for t in self.ts) | set(float(t) for t in extra_times))
        lines = [",".join(["t", *names])]
        for t in times:
            state = self(t)
            lines.append(",".join(_fmt17(v) for v in (t, *state)))
        return "\n".join(lines) + "\n"


def _fmt17(value):
    return f"{float(value):.17g}"


def _norm(err, y, ynew, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _eval_rhs(rhs, t, y):
    out = np.asarray(rhs(t, y), dtype=float).reshape(y.shape)
    return out


def _initial_step(rhs, t0, y0, f0, direction, rtol, atol, span):
    scale = atol + np.abs(y0) * rtol
    d0 = float(np.sqrt(np.mean((y0 / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    try:
        f1 = _eval_rhs(rhs, t0 + direction * h0, y0 + direction * h0 * f0)
        d2 = float(np.sqrt(np.mean(((f1 - f0) / scale) ** 2))) / h0
    except DomainError:
        return h0 * 1e-3
    if not math.isfinite(d2):
        return h0 * 1e-3
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def _dopri_step(rhs, t, y, f0, h):
    k = [f0]
    for i in range(1, 7):
        yi = y + h * sum(a * kk for a, kk in zip(_A[i], k))
        k.append(_eval_rhs(rhs, t + _C[i] * h, yi))
    ynew = y + h * sum(b * kk for b, kk in zip(_B5, k) if b)
    err = h * sum(e * kk for e, kk in zip(_E, k) if e)
    return ynew, err, k


def integrate_ode(rhs, t0, y0, tf, rtol=None, atol=None, fixed_step=None, max_steps=200_000, h0=None):
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``tf`` with DOPRI5.

    Step control is proportional-integral.  With ``fixed_step`` the error
    control is switched off and steps of exactly that size are taken (used to
    measure the convergence order).  Blow-up is reported through the returned
    trajectory's ``status``/``bracket``; it is a result, not an exception.
    """
    rtol = SETTINGS.rtol if rtol is None else rtol
    atol = SETTINGS.atol if atol is None else atol
    if rtol <= 0 or atol <= 0:
        raise ValueError("rtol and atol must be positive")
    t = float(t0)
    tf = float(tf)
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    direction = 1.0 if tf >= t else -1.0
    span = abs(tf - t)
    f = _eval_rhs(rhs, t, y)
    ts, ys, fs = [t], [y.copy()], [f.copy()]
    stages = []
    status, bracket, error_t = COMPLETED, None, None
    n_rej = n_acc = 0

    if span == 0:
        return _make_traj(ts, ys, fs, stages, direction, status, bracket, error_t, 0, 0)

    with np.errstate(over="ignore", invalid="ignore"):
        if fixed_step is not None:
            n = max(1, int(round(span / fixed_step)))
            h = span / n
            for i in range(n):
                y_old = y
                y, _, k = _dopri_step(rhs, t, y, f, direction * h)
                stages.append((t, direction * h, y_old, np.array(k)))
                f = k[6]
                t = tf if i == n - 1 else float(t0) + direction * h * (i + 1)
                ts.append(t)
                ys.append(y.copy())
                fs.append(f.copy())
            return _make_traj(ts, ys, fs, stages, direction, status, bracket, error_t, n, 0)

        h = abs(h0) if h0 else _initial_step(rhs, t, y, f, direction, rtol, atol, span)
        err_prev = 1e-4
        last_reject = False
        domain_hit = None
        while direction * (tf - t) > 0:
            if n_acc + n_rej > max_steps:
                raise AccuracyError(f"maximum number of steps exceeded at t={t}", estimate=y)
            h_min = 1e-13 * max(abs(t), 1.0)
            if h < h_min:
                if domain_hit is not None:
                    status, error_t = DOMAIN_ERROR, t
                else:
                    status = BLOWUP
                    bracket = _blowup_bracket(t, y, f, direction, h, t0, tf, rtol)
                break
            h_try = min(h, abs(tf - t))
            try:
                ynew, err, k = _dopri_step(rhs, t, y, f, direction * h_try)
                fnew = k[6]
                en = _norm(err, y, ynew, rtol, atol)
                if not (math.isfinite(en) and np.all(np.isfinite(ynew)) and np.all(np.isfinite(fnew))):
                    en = math.inf
            except DomainError:
                domain_hit = t
                n_rej += 1
                h = h_try * 0.25
                last_reject = True
                continue
            if en <= 1.0:
                t_new = t + direction * h_try
                if abs(tf - t_new) < 1e-14 * max(abs(tf), 1.0):
                    t_new = tf
                stages.append((t, direction * h_try, y, np.array(k)))
                t, y, f = t_new, ynew, fnew
                ts.append(t)
                ys.append(y.copy())
                fs.append(f.copy())
                n_acc += 1
                domain_hit = None
                if en == 0.0:
                    fac = 5.0
                else:
                    fac = 0.9 * en ** (-0.7 / 5) * err_prev ** (0.4 / 5)
                    fac = min(5.0, max(0.2, fac))
                if last_reject:
                    fac = min(fac, 1.0)
                err_prev = max(en, 1e-4)
                h = h_try * fac
                last_reject = False
            else:
                n_rej += 1
                fac = 0.2 if not math.isfinite(en) else max(0.2, 0.9 * en ** (-1 / 5))
                h = h_try * fac
                last_reject = True
    return _make_traj(ts, ys, fs, stages, direction, status, bracket, error_t, n_acc, n_rej)


def _blowup_bracket(t, y, f, direction, h, t0, tf, rtol):
    # power-law blow-up |y| ~ C |T - t|^-p with p <= 1 gives |T - t| <= |y|/|y'|
    ny, nf = float(np.max(np.abs(y))), float(np.max(np.abs(f)))
    reach = max(2.0 * ny / nf if nf > 0 else h, h)
    # the global error moves the numerical singularity by O(rtol)
    band = 1e3 * rtol * max(abs(t), 1.0)
    near = t - direction * band
    if direction * (near - t0) < 0:
        near = t0
    far = t + direction * max(reach, band)
    if direction * (far - tf) > 0:
        far = tf
    return (min(near, far), max(near, far))


def _make_traj(ts, ys, fs, stages, direction, status, bracket, error_t, n_acc, n_rej):
    ts = np.array(ts)
    ys = np.array(ys)
    fs = np.array(fs)
    if direction < 0:
        ts, ys, fs = ts[::-1].copy(), ys[::-1].copy(), fs[::-1].copy()
        stages = stages[::-1]
    stats = {"accepted": n_acc, "rejected": n_rej}
    return Trajectory(ts, ys, fs, status, bracket, error_t, stats, stages or None)


# ---------------------------------------------------------------------------
# quadrature


def quad_adaptive(f, a, b, tol=None, max_depth=50):
    """Adaptive Simpson quadrature of ``f`` over ``[a, b]``.

    Raises :class:`AccuracyError` (with the best estimate attached) when a
    panel hits the recursion-depth cap before meeting its share of ``tol``.
    """
    tol = SETTINGS.quad_tol if tol is None else tol
    a, b = float(a), float(b)
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4 * fm + fb)
    failed = []
    value = _simpson(f, a, m, b, fa, fm, fb, whole, tol, max_depth, failed)
    if failed:
        raise AccuracyError(
            f"adaptive Simpson hit depth {max_depth} near t={failed[0]}", estimate=value
        )
    return value


def _simpson(f, a, m, b, fa, fm, fb, whole, tol, depth, failed):
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4 * frm + fb)
    both = left + right
    delta = both - whole
    if abs(delta) <= 15 * tol or abs(delta) <= 1e-14 * abs(both) or m in (a, b):
        return both + delta / 15.0
    if depth <= 0:
        failed.append(m)
        return both + delta / 15.0
    return _simpson(f, a, lm, m, fa, flm, fm, left, tol / 2, depth - 1, failed) + _simpson(
        f, m, rm, b, fm, frm, fb, right, tol / 2, depth - 1, failed
    )


def _clenshaw(coef, u):
    # scalar Chebyshev series; numpy's chebval is dominated by call overhead here
    b1 = b2 = 0.0
    for c in reversed(coef[1:]):
        b1, b2 = c + 2.0 * u * b1 - b2, b1
    return coef[0] + u * b1 - b2


class Primitive:
    """``F(s) = integral of f from anchor to s`` with cached anchor cells.

    Each cell of width ``cell`` is represented by Chebyshev interpolants of
    ``f`` (split in halves until the trailing coefficients fall below
    ``tol``) whose antiderivatives are evaluated directly, so nested use
    (an integrand that itself calls a primitive) stays cheap.  Pieces that
    refuse to converge fall back to adaptive Simpson, as does any cell not
    strictly inside ``domain`` (integration then stops at ``s``).
    """

    DEGREE = 24
    MAX_SPLITS = 10

    def __init__(self, f, anchor, cell=0.0625, tol=1e-12, domain=(-math.inf, math.inf)):
        self.f = f
        self.domain = domain
        self.anchor = float(anchor)
        self.cell = cell
        self.tol = tol
        self._cum = {0: 0.0}
        self._pieces = {}

    def _node(self, k):
        return self.anchor + k * self.cell

    def _fit(self, a, b, depth, out):
        try:
            vals = lambda xs: np.array([self.f(float(x)) for x in xs])
            cheb = Chebyshev.interpolate(vals, self.DEGREE, domain=[a, b])
            coef = np.abs(cheb.coef)
            tail = float(np.max(coef[-3:]))
            scale = float(np.max(coef))
            ok = math.isfinite(scale) and tail * (b - a) <= max(self.tol, 64 * np.finfo(float).eps * scale * (b - a))
        except DomainError:
            cheb, ok = None, False
        if ok:
            out.append((a, b, cheb.integ(lbnd=a).coef.tolist()))
        elif depth < self.MAX_SPLITS:
            m = 0.5 * (a + b)
            self._fit(a, m, depth + 1, out)
            self._fit(m, b, depth + 1, out)
        else:
            out.append((a, b, None))

    def _cell(self, k):
        pieces = self._pieces.get(k)
        if pieces is None:
            raw = []
            self._fit(self._node(k), self._node(k + 1), 0, raw)
            pieces, acc = [], 0.0
            for a, b, F in raw:
                pieces.append((a, b, F, acc))
                acc += self._piece_value(a, F, b, b)
            self._pieces[k] = pieces
        return pieces

    def _piece_value(self, a, F, s, b=None):
        if F is None:
            return quad_adaptive(self.f, a, s, self.tol)
        return _clenshaw(F, (2.0 * s - a - b) / (b - a)) - _clenshaw(F, -1.0)

    def _within(self, k, s):
        lo, hi = self.domain
        if not (lo < self._node(k) and self._node(k + 1) < hi):
            return quad_adaptive(self.f, self._node(k), s, self.tol)
        for a, b, F, acc in self._cell(k):
            if s <= b:
                return acc + self._piece_value(a, F, s, b)
        a, b, F, acc = self._cell(k)[-1]
        return acc + self._piece_value(a, F, s, b)

    def _cumulative(self, k):
        cum = self._cum
        if k in cum:
            return cum[k]
        if k > 0:
            j = max(i for i in cum if i < k)
            while j < k:
                cum[j + 1] = cum[j] + self._within(j, self._node(j + 1))
                j += 1
        else:
            j = min(i for i in cum if i > k)
            while j > k:
                cum[j - 1] = cum[j] - self._within(j - 1, self._node(j))
                j -= 1
        return cum[k]

    def __call__(self, s):
        s = float(s)
        k = int(math.floor((s - self.anchor) / self.cell))
        return self._cumulative(k) + self._within(k, s)


# ---------------------------------------------------------------------------
# root finding


def root_bracketed(f, lo, hi, tol=1e-12):
    """Root of ``f`` in ``[lo, hi]`` by Brent's method; needs a sign change."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return float(lo)
    if fhi == 0:
        return float(hi)
    if flo * fhi > 0:
        raise PreconditionError(f"no sign change on [{lo}, {hi}]: f={flo}, {fhi}")
    return float(brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500))


# ---------------------------------------------------------------------------
# harnesses


def _common_window(trajs):
    lo = max(tr.t0 for tr in trajs)
    hi = min(tr.t_end for tr in trajs)
    if not lo < hi:
        raise AbelkitError("trajectories share no common time window")
    return lo, hi


def superposition_residual(eq, solutions, k, grid=None, guard=None):
    """Max Riccati residual of the superposed solution on a pole-guarded grid.

    ``eq`` needs ``rhs(t, x)``; ``solutions`` are three trajectories.  The
    time derivative of the combination is taken exactly by the chain rule
    through the particular solutions' own derivatives.
    """
    guard = SETTINGS.pole_guard if guard is None else guard
    lo, hi = _common_window(solutions)
    if grid is None:
        grid = np.linspace(lo, hi, 401)[1:-1]
    worst = 0.0
    used = 0
    for t in grid:
        if not lo <= t <= hi:
            continue
        xs = [float(tr(t)[0]) for tr in solutions]
        dxs = [float(eq.rhs(t, xi)) for xi in xs]
        x1, x2, x3 = xs
        num = k * x1 * (x3 - x2) + x2 * (x1 - x3)
        den = k * (x3 - x2) + (x1 - x3)
        if abs(den) < guard:
            continue
        dnum = [k * (x3 - x2) + x2, -k * x1 + x1 - x3, k * x1 - x2]
        dden = [1.0, -k, k - 1.0]
        xdot = sum((dn * den - num * dd) / den**2 * dx for dn, dd, dx in zip(dnum, dden, dxs))
        x = num / den
        worst = max(worst, abs(xdot - float(eq.rhs(t, x))))
        used += 1
    if used == 0:
        raise AbelkitError("every grid point fell inside the pole guard band")
    return worst


def conservation_residual(energy, traj, n=2001):
    """Max ``|E(state(t)) - E(state(t0))|`` over accepted steps and a dense grid."""
    e0 = energy(*traj(traj.t0))
    times = np.union1d(traj.ts, traj.grid(n))
    return max(abs(energy(*traj(t)) - e0) for t in times)


def darboux_growth_residual(D, cofactor, traj, n=4001):
    """Relative deviation of ``D`` along the flow from ``D0 * exp(int cofactor)``.

    ``D`` and ``cofactor`` are callables of the state; the exponent is
    integrated with the trapezoid rule on the dense output.
    """
    times = traj.grid(n)
    states = [traj(t) for t in times]
    fvals = np.array([cofactor(*s) for s in states])
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (fvals[1:] + fvals[:-1]) * np.diff(times))])
    d0 = D(*states[0])
    worst = 0.0
    for s, acc in zip(states, integral):
        actual = D(*s)
        predicted = d0 * math.exp(acc)
        worst = max(worst, abs(actual - predicted) / max(abs(predicted), 1e-300))
    return worst


def solution_map_residual(mapping, traj_src, traj_dst, n=401, guard=None, window=None):
    """Max ``|mapping(t, src(t)) - dst(t)|`` over the common window.

    ``window`` narrows the comparison further (e.g. to stay clear of a
    blow-up).  Points where the mapped value is non-finite (pole of the map)
    or larger than ``1/guard`` are skipped.
    """
    guard = SETTINGS.pole_guard if guard is None else guard
    lo, hi = _common_window([traj_src, traj_dst])
    if window is not None:
        lo, hi = max(lo, window[0]), min(hi, window[1])
    worst = 0.0
    used = 0
    for t in np.linspace(lo, hi, n):
        try:
            mapped = np.atleast_1d(np.asarray(mapping(t, traj_src(t)), dtype=float))
        except (DomainError, ZeroDivisionError):
            continue
        if not np.all(np.isfinite(mapped)) or np.max(np.abs(mapped)) > 1 / guard:
            continue
        worst = max(worst, float(np.max(np.abs(mapped - traj_dst(t)))))
        used += 1
    if used == 0:
        raise AbelkitError("no usable grid points in the common window")
    return worst


def fd_residual(solution, rhs, times, h=1e-4):
    """Max ``|x'(t) - rhs(t, x(t))|`` with a central difference for ``x'``."""
    worst = 0.0
    for t in times:
        xp, xm = solution(t + h), solution(t - h)
        deriv = (xp - xm) / (2 * h)
        worst = max(worst, abs(deriv - rhs(t, solution(t))))
    return worst
