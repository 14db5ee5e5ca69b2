"""Observed convergence order of the fixed-step Dormand-Prince integrator.

Halves the step a few times on problems with known solutions and prints the
log2 error ratios, which settle near 5 once the step resolves the solution.
"""

import argparse
import math
from dataclasses import dataclass, field

from abelkit.numerics import integrate_ode

PROBLEMS = {
    "growth": (lambda t, y: [y[0]], 1.0, 1.0, math.e),
    "sin-coupled": (lambda t, y: [y[0] * math.cos(t)], 1.0, 2.0, math.exp(math.sin(2.0))),
    "riccati-tan": (lambda t, y: [1 + y[0] ** 2], 0.0, 1.0, math.tan(1.0)),
}


@dataclass
class OrderConfig:
    h0: float = 0.25
    levels: int = 5
    problems: list = field(default_factory=lambda: list(PROBLEMS))


def orders(name, cfg):
    rhs, x0, tf, exact = PROBLEMS[name]
    errs = []
    for k in range(cfg.levels):
        h = cfg.h0 / 2**k
        tr = integrate_ode(rhs, 0.0, [x0], tf, fixed_step=h)
        errs.append(abs(tr(tf)[0] - exact))
    return errs, [math.log2(a / b) for a, b in zip(errs, errs[1:]) if b > 0]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h0", type=float, default=OrderConfig.h0)
    ap.add_argument("--levels", type=int, default=OrderConfig.levels)
    args = ap.parse_args()
    cfg = OrderConfig(h0=args.h0, levels=args.levels)
    for name in cfg.problems:
        errs, ords = orders(name, cfg)
        print(f"{name:12s} final error {errs[-1]:.2e}  orders " + " ".join(f"{o:.2f}" for o in ords))


if __name__ == "__main__":
    main()
