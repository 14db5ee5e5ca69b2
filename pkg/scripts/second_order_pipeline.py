"""Second member of the D = d/dt + x^2 hierarchy, end to end.

Builds u2 + 4 x^2 u1 + x^5 = 0, finds Darboux polynomials v + b(x) of the
planar field, turns each single-factor Jacobi multiplier into a Lagrangian
and reports residuals plus the energy drift along one trajectory.

    python scripts/second_order_pipeline.py --x0 0.5 --v0 0.1 --tf 2
"""

import argparse
import json
from dataclasses import asdict, dataclass

from abelkit import inverse_lagrangian as il
from abelkit.darboux_jm import build_multiplier, find_darboux_vlinear, jm_exponents, jm_residual
from abelkit.errors import PreconditionError
from abelkit.expr import evaluate
from abelkit.hierarchy import build_hierarchy_equation, to_planar_vf
from abelkit.numerics import conservation_residual, integrate_ode


@dataclass
class PipelineConfig:
    x0: float = 0.5
    v0: float = 0.1
    tf: float = 2.0
    max_bdeg: int = 3
    rtol: float = 1e-11
    atol: float = 1e-13


def run(cfg):
    h = build_hierarchy_equation(["1", "0", "0", "0"], 2)
    X = to_planar_vf(h)
    pairs = find_darboux_vlinear(X, cfg.max_bdeg)
    traj = integrate_ode(X.ode(), 0.0, [cfg.x0, cfg.v0], cfg.tf, rtol=cfg.rtol, atol=cfg.atol)
    rows = []
    for p in pairs:
        try:
            (nu,) = jm_exponents([p], X)
        except PreconditionError:
            continue
        R = build_multiplier([p], [nu])
        L = il.lagrangian_from_multiplier(il.power_form_from_multiplier(R))
        E = il.energy(L)
        drift = conservation_residual(lambda x, v: evaluate(E, {"x": x, "v": v}), traj)
        rows.append(
            {
                "D": p.D.format(),
                "cofactor": p.cofactor.format(),
                "nu": str(nu),
                "jm_residual": jm_residual(R, X),
                "euler_lagrange_residual": il.euler_lagrange_residual(L, X.Q),
                "energy_drift": drift,
            }
        )
    return {
        "equation": h.jet().format() + " = 0",
        "trajectory_status": traj.status,
        "config": asdict(cfg),
        "multipliers": rows,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name, default in asdict(PipelineConfig()).items():
        ap.add_argument(f"--{name.replace('_', '-')}", type=type(default), default=default)
    args = ap.parse_args()
    cfg = PipelineConfig(**{k: getattr(args, k) for k in asdict(PipelineConfig())})
    print(json.dumps(run(cfg), indent=2))


if __name__ == "__main__":
    main()
