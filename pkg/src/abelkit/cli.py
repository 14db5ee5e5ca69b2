"""Command-line front end.  Every subcommand prints one JSON document.

Exit codes: 0 success, 1 usage error, 2 unreadable input, 3 mathematical
precondition violated, 4 accuracy not attained.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import abel_model as am
from . import darboux_jm as dj
from . import inverse_lagrangian as il
from . import lie_structure as ls
from .config import SETTINGS, overridden
from .errors import AbelkitError, AccuracyError, BlowUpError, DomainError, ParseError, PreconditionError
from .expr import parse
from .hierarchy import build_hierarchy_equation
from .jsonio import dumps
from .numerics import conservation_residual, integrate_ode, superposition_residual
from .poly import Poly, PolyVF1D, xy

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_PRECONDITION, EXIT_ACCURACY = 0, 1, 2, 3, 4


class InputError(AbelkitError):
    """Input file or inline JSON could not be read."""


class UsageError(AbelkitError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# input


def read_json(source):
    text = source.strip()
    if not text.startswith(("{", "[")):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {source}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from None


def _interval(data):
    iv = data.get("interval")
    if iv is None:
        return None
    if len(iv) != 2 or not float(iv[0]) < float(iv[1]):
        raise InputError("interval must be [t_lo, t_hi] with t_lo < t_hi")
    return (float(iv[0]), float(iv[1]))


def load_equation(source):
    """First- or second-kind equation from a file path or inline JSON."""
    data = read_json(source)
    if not isinstance(data, dict):
        raise InputError("equation JSON must be an object")
    coeffs = data.get("coeffs", {k: v for k, v in data.items() if k not in ("kind", "interval")})
    kind = data.get("kind")
    interval = _interval(data)
    if kind is None:
        kind = "abel2" if "f" in coeffs else "abel1"
    get = lambda key: parse(str(coeffs.get(key, "0")))
    if kind == "abel2":
        return am.AbelSecondKind(get("f"), tuple(get(f"B{i}") for i in range(4)), interval)
    if kind == "riccati":
        keys = ("c0", "c1", "c2") if "c0" in coeffs else ("A0", "A1", "A2")
        return am.AbelFirstKind(tuple(get(k) for k in keys), interval=interval)
    if kind != "abel1":
        raise InputError(f"unknown equation kind {kind!r}")
    n = max((int(k[1:]) for k in coeffs if k.startswith("A") and k[1:].isdigit()), default=-1)
    if n < 2:
        n = 3
    return am.AbelFirstKind(tuple(get(f"A{i}") for i in range(n + 1)), interval=interval)


def _poly(value):
    if isinstance(value, str):
        return xy(value)
    return Poly.from_json(value, 2)


def load_vf(source):
    data = read_json(source)
    data = data.get("vf", data)
    try:
        return dj.PlanarVF(_poly(data["P"]), _poly(data["Q"]))
    except KeyError as exc:
        raise InputError(f"vector field needs P and Q (missing {exc})") from None


def _first_kind(eq):
    if isinstance(eq, am.AbelSecondKind):
        raise PreconditionError("this subcommand needs a first-kind equation; run convert first")
    return eq


# ---------------------------------------------------------------------------
# subcommands


def cmd_classify(args):
    eq = _first_kind(load_equation(args.equation))
    return am.classify(eq).to_json()


def cmd_canonicalize(args):
    eq = _first_kind(load_equation(args.equation))
    cls, out, gauges = am.canonical_form(eq)
    return {"class": cls.kind, "equation": out.to_json(), "gauges": [g.to_json() for g in gauges]}


def cmd_invariants(args):
    eq = _first_kind(load_equation(args.equation))
    out = am.liouville_invariants(eq, args.phi5_variant).to_json()
    out["class"] = am.classify(eq).kind
    return out


def cmd_transform(args):
    eq = _first_kind(load_equation(args.equation))
    g = am.Gauge(parse(args.alpha), parse(args.beta))
    return am.gauge_transform(eq, g).to_json()


def cmd_convert(args):
    eq = load_equation(args.equation)
    if not isinstance(eq, am.AbelSecondKind):
        raise PreconditionError("convert expects a second-kind equation (keys f, B0..B3)")
    return am.second_to_first(eq).to_json()


def cmd_lienard(args):
    return am.lienard_to_abel(parse(args.f, ("x",)), parse(args.g, ("x",))).to_json()


def _solution_grid(t0, tf, n, stop=None):
    ts = np.linspace(t0, tf, n)
    if stop is not None:
        ts = ts[(ts - t0) * (tf - t0) < (stop - t0) * (tf - t0)]
    return ts


def cmd_solve(args):
    eq = _first_kind(load_equation(args.equation))
    t0, x0, tf = args.t0, args.x0, args.tf
    summary = {"t0": t0, "x0": x0, "tf": tf}
    method = "integrate_ode"
    sol = None
    try:
        cls = am.classify(eq).kind
    except PreconditionError:
        cls = "higher-degree"
    summary["class"] = cls
    A = eq.coeffs
    if cls == am.BERNOULLI and x0 != 0:
        sol, method = am.solve_bernoulli(eq, t0, x0, t_end=tf), "solve_bernoulli"
    elif cls == am.SEPARABLE:
        sol, method = am.solve_separable(eq, t0, x0, t_end=tf), "solve_separable"
    elif cls == am.RICCATI and am.is_zero(eq.A(2), **eq.check_kw()):
        sol, method = am.solve_linear(A[0], A[1], t0, x0), "solve_linear"
    elif cls == am.RICCATI and am.separable_parts(eq) is not None:
        sol, method = am.solve_separable(eq, t0, x0, t_end=tf), "solve_separable"
    summary["method"] = method
    rows = []
    if sol is not None:
        stop = sol.t_blowup
        ts = _solution_grid(t0, tf, args.points, stop)
        xs = []
        for t in ts:
            try:
                xs.append(sol(t))
            except BlowUpError:
                break
        ts = ts[: len(xs)]
        residual = _quadrature_residual(sol, eq, ts[1:-1] if len(ts) > 2 else ts, stop)
        summary["residual_kind"] = "relative central-difference residual"
        summary["status"] = "blowup" if stop is not None else "completed"
        if sol.blowup is not None:
            summary["blowup_bracket"] = list(sol.blowup)
        rows = list(zip(ts, xs))
    else:
        traj = integrate_ode(eq.ode(), t0, [x0], tf, rtol=args.rtol, atol=args.atol)
        summary["status"] = traj.status
        if traj.bracket is not None:
            summary["blowup_bracket"] = list(traj.bracket)
        if traj.error_t is not None:
            summary["domain_error_t"] = traj.error_t
        summary["steps"] = traj.stats
        grid = traj.grid(args.points)
        rows = [(t, float(traj(t)[0])) for t in grid]
        residual = _reintegration_gap(eq, traj, t0, x0, tf, args)
        summary["residual_kind"] = "relative gap to a 100x tighter re-integration"
    summary["residual"] = residual
    summary["residual_tol"] = args.residual_tol
    summary["points"] = len(rows)
    if args.emit_csv:
        if sol is None:
            text = traj.to_csv(["x"], extra_times=[t for t, _ in rows])
        else:
            text = "t,x\n" + "".join(f"{t:.17g},{x:.17g}\n" for t, x in rows)
        Path(args.emit_csv).write_text(text)
        summary["csv"] = args.emit_csv
    if not residual <= args.residual_tol:
        raise AccuracyError(f"solution residual {residual:.3g} exceeds {args.residual_tol:g}", summary)
    return summary


def _quadrature_residual(sol, eq, times, stop):
    worst = 0.0
    for t in times:
        # shrink the difference step near a blow-up so truncation stays relative
        h = 1e-4 if stop is None else min(1e-4, 3e-4 * abs(stop - t))
        deriv = (sol(t + h) - sol(t - h)) / (2 * h)
        f = eq.rhs(t, sol(t))
        worst = max(worst, abs(deriv - f) / (1.0 + abs(f)))
    return worst


def _reintegration_gap(eq, traj, t0, x0, tf, args):
    tight = integrate_ode(eq.ode(), t0, [x0], tf, rtol=args.rtol / 100, atol=args.atol / 100)
    lo, hi = max(traj.t0, tight.t0), min(traj.t_end, tight.t_end)
    if traj.status != "completed":
        # stay clear of the singularity, where a tiny shift of the blow-up time dominates
        hi = lo + 0.99 * (hi - lo) if tf > t0 else hi
        lo = hi - 0.99 * (hi - lo) if tf < t0 else lo
    if not lo < hi:
        return 0.0
    gap = 0.0
    for t in np.linspace(lo, hi, 401):
        a, b = float(traj(t)[0]), float(tight(t)[0])
        gap = max(gap, abs(a - b) / (1.0 + abs(b)))
    return gap


def cmd_superpose(args):
    eq = _first_kind(load_equation(args.equation))
    if eq.degree != 2:
        raise PreconditionError("superpose expects a Riccati equation")
    xs = (args.x1, args.x2, args.x3)
    if len(set(xs)) != 3:
        raise PreconditionError("x1, x2, x3 must be pairwise distinct")
    trajs = [integrate_ode(eq.ode(), args.t0, [x], args.tf, rtol=args.rtol, atol=args.atol) for x in xs]
    k = ls.INF if args.k in ("inf", "infinity") else float(args.k)
    report = {
        "k": "inf" if k is ls.INF else k,
        "window": [max(tr.t0 for tr in trajs), min(tr.t_end for tr in trajs)],
        "statuses": [tr.status for tr in trajs],
    }
    if k is ls.INF:
        report["residual"] = 0.0
        report["note"] = "k = infinity returns the first particular solution"
        return report
    residual = superposition_residual(eq, trajs, k)
    report["residual"] = residual
    t_end = report["window"][1]
    combo = ls.riccati_superposition(*(float(tr(t_end)[0]) for tr in trajs), k)
    report["value_at_window_end"] = "inf" if combo is ls.INF else combo
    if residual > args.residual_tol:
        raise AccuracyError(f"superposition residual {residual:.3g} exceeds {args.residual_tol:g}", report)
    return report


def cmd_sl2(args):
    eq = _first_kind(load_equation(args.equation))
    parts = [p.strip() for p in args.matrix.split(",")]
    if len(parts) != 4:
        raise UsageError("--matrix takes four comma-separated expressions a,b,c,d")
    A = ls.Mobius(*(parse(p) for p in parts))
    return ls.sl2_coefficient_action(A, eq).to_json()


def cmd_hierarchy(args):
    ps = [parse(p.strip()) for p in args.p.split(",")]
    h = build_hierarchy_equation(ps, args.n)
    out = h.to_json()
    if h.is_constant():
        jet = h.jet()
        out["jet"] = jet.to_json()
        out["text"] = jet.format() + " = 0"
    return out


def _pairs_json(pairs):
    return [
        {"D": p.D.to_json(), "cofactor": p.cofactor.to_json(), "D_text": p.D.format(), "cofactor_text": p.cofactor.format()}
        for p in pairs
    ]


def cmd_darboux(args):
    X = load_vf(args.vf)
    pairs = dj.find_darboux_vlinear(X, args.max_bdeg)
    return {"vf": X.to_json(), "pairs": _pairs_json(pairs)}


def _multipliers(X, max_bdeg):
    pairs = dj.find_darboux_vlinear(X, max_bdeg)
    found = []
    for p in pairs:
        try:
            nu = dj.jm_exponents([p], X)
        except PreconditionError:
            continue
        found.append((p, nu[0]))
    return pairs, found


def cmd_multiplier(args):
    X = load_vf(args.vf)
    pairs, found = _multipliers(X, args.max_bdeg)
    if not found:
        raise PreconditionError("no single-factor Jacobi multiplier among the Darboux pairs found")
    out = {"vf": X.to_json(), "pairs": _pairs_json(pairs), "divergence": dj.divergence(X).to_json()}
    mults = []
    for p, nu in found:
        R = dj.build_multiplier([p], [nu])
        mults.append(
            {"D": p.D.format(), "nu": nu, "multiplier": R.to_json(), "residual": dj.jm_residual(R, X)}
        )
    out["multipliers"] = mults
    out["nu"] = [m["nu"] for m in mults]
    return out


def cmd_lagrangian(args):
    X = load_vf(args.vf)
    if X.P != xy("v"):
        raise PreconditionError("lagrangian expects a second-order field with P = v")
    F = X.Q
    _, found = _multipliers(X, args.max_bdeg)
    if not found:
        raise PreconditionError("no single-factor Jacobi multiplier among the Darboux pairs found")
    traj = integrate_ode(X.ode(), 0.0, [args.x0, args.v0], args.tf, rtol=args.rtol, atol=args.atol)
    results = []
    for p, nu in found:
        R = il.power_form_from_multiplier(dj.build_multiplier([p], [nu]))
        try:
            L = il.lagrangian_from_multiplier(R)
        except PreconditionError as exc:
            results.append({"D": p.D.format(), "nu": nu, "skipped": str(exc)})
            continue
        E = il.energy(L)
        drift = conservation_residual(lambda x, v: _eval_phase(E, x, v), traj)
        entry = il.summary_json(R, L)
        entry.update(
            {
                "D": p.D.format(),
                "nu": nu,
                "euler_lagrange_residual": il.euler_lagrange_residual(L, F),
                "helmholtz_residual": il.helmholtz_residual_1d(R, F),
                "energy_drift": drift,
            }
        )
        results.append(entry)
    return {
        "vf": X.to_json(),
        "trajectory": {"x0": args.x0, "v0": args.v0, "tf": args.tf, "status": traj.status},
        "lagrangians": results,
    }


def _eval_phase(e, x, v):
    from .expr import evaluate

    return evaluate(e, {"x": float(x), "v": float(v)})


def cmd_normalizer(args):
    if args.span == "abel":
        span = ls.V_ABEL
    elif args.span == "riccati":
        span = ls.V_RICCATI
    else:
        data = read_json(args.span)
        basis = data.get("basis", data) if isinstance(data, dict) else data
        try:
            span = ls.VSpan(tuple(PolyVF1D([Fraction(str(c)) for c in b]) for b in basis))
        except (ValueError, TypeError) as exc:
            raise InputError(f"bad span basis: {exc}") from None
    result = ls.normalizer_in_degree(span, args.max_deg)
    return {
        "span": span.to_json(),
        "max_deg": args.max_deg,
        "normalizer": result.to_json(),
        "normalizer_text": [b.format() for b in result.basis],
        "closed": ls.is_closed(result),
    }


# ---------------------------------------------------------------------------
# parser


def build_parser():
    parser = _Parser(prog="abelkit", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=lambda s: int(s, 0), help="sampling seed (default: ABELKIT_SEED or 0xABE1)")
    parser.add_argument("--tol", type=float, help="tolerance for numerical identity tests")
    parser.add_argument("--output", "-o", help="write the JSON result here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def eq_cmd(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("equation", help="equation JSON file or inline JSON")
        p.set_defaults(func=func)
        return p

    eq_cmd("classify", cmd_classify, "classify a first-kind equation")
    eq_cmd("canonicalize", cmd_canonicalize, "reduce to the first or second canonical form")
    p = eq_cmd("invariants", cmd_invariants, "Liouville invariants")
    p.add_argument("--phi5-variant", choices=am.PHI5_VARIANTS, default=None)
    p = eq_cmd("transform", cmd_transform, "apply the gauge x = alpha*xbar + beta")
    p.add_argument("--alpha", default="1")
    p.add_argument("--beta", default="0")
    eq_cmd("convert", cmd_convert, "second kind to first kind")

    p = sub.add_parser("lienard", help="first-kind equation of x'' + f(x) x' + g(x) = 0")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.set_defaults(func=cmd_lienard)

    def ode_opts(p):
        p.add_argument("--rtol", type=float, default=SETTINGS.rtol)
        p.add_argument("--atol", type=float, default=SETTINGS.atol)
        p.add_argument("--residual-tol", type=float, default=1e-6)

    p = eq_cmd("solve", cmd_solve, "solve an initial value problem")
    p.add_argument("--t0", type=float, required=True)
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--tf", type=float, required=True)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--emit-csv")
    ode_opts(p)

    p = eq_cmd("superpose", cmd_superpose, "check the Riccati superposition rule numerically")
    p.add_argument("--k", required=True, help="real number or 'inf'")
    for name in ("t0", "x1", "x2", "x3", "tf"):
        p.add_argument(f"--{name}", type=float, required=True)
    ode_opts(p)

    p = eq_cmd("sl2", cmd_sl2, "SL(2) action on a Riccati equation")
    p.add_argument("--matrix", required=True, help="a,b,c,d expressions in t")

    p = sub.add_parser("hierarchy", help="member of the D = d/dt + x^2 hierarchy")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", required=True, help="comma-separated p0,...,p(n+1)")
    p.set_defaults(func=cmd_hierarchy)

    for name, func, text in (
        ("darboux", cmd_darboux, "Darboux polynomials v + b(x)"),
        ("multiplier", cmd_multiplier, "Jacobi multipliers from Darboux pairs"),
        ("lagrangian", cmd_lagrangian, "Lagrangians and energies from Jacobi multipliers"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("vf", help="vector-field JSON file or inline JSON")
        p.add_argument("--max-bdeg", type=int, default=3)
        p.set_defaults(func=func)
        if name == "lagrangian":
            p.add_argument("--x0", type=float, default=0.5)
            p.add_argument("--v0", type=float, default=0.1)
            p.add_argument("--tf", type=float, default=2.0)
            p.add_argument("--rtol", type=float, default=SETTINGS.rtol)
            p.add_argument("--atol", type=float, default=SETTINGS.atol)

    p = sub.add_parser("normalizer", help="normalizer of a span of 1-D vector fields")
    p.add_argument("--span", required=True, help="abel, riccati or a JSON file of coefficient lists")
    p.add_argument("--max-deg", type=int, required=True)
    p.set_defaults(func=cmd_normalizer)
    return parser


def _emit(result, args):
    text = dumps(result) + "\n"
    if getattr(args, "output", None):
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.tol is not None:
        changes["tol"] = args.tol
    try:
        with overridden(**changes):
            result = args.func(args)
    except UsageError as exc:
        print(f"abelkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, ParseError) as exc:
        print(f"abelkit: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AccuracyError as exc:
        if isinstance(exc.estimate, dict):
            _emit(exc.estimate, args)
        print(f"abelkit: accuracy not attained: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except (PreconditionError, DomainError, BlowUpError) as exc:
        print(f"abelkit: precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except AbelkitError as exc:
        print(f"abelkit: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    _emit(result, args)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
