"""Which Phi5 variant keeps Phi3^5 / Phi5^3 unchanged under random gauges?

Prints the worst relative change of the quotient for every variant.  The
variant with a change at rounding level is the one configured as default.
"""

import argparse
import json
import random
from dataclasses import dataclass

from abelkit import abel_model as am
from abelkit.expr import eval_scalar, parse


@dataclass
class SelectionConfig:
    seed: int = 5
    cases: int = 20
    times: tuple = (0.4, 0.9, 1.3, 1.8, 2.4)


def _coef(rng):
    a, b, c = (rng.randint(-3, 3) for _ in range(3))
    return f"({a}) + ({b})*t + ({c})*sin(t)"


def _equation(rng):
    # leading coefficient kept away from zero on the sample range
    lead = f"{rng.randint(2, 4)} + cos(t)"
    return am.AbelFirstKind(tuple(parse(s) for s in (_coef(rng), _coef(rng), _coef(rng), lead)))


def _gauge(rng):
    return am.Gauge(parse(f"{rng.randint(2, 3)} + sin(t)"), parse(_coef(rng)))


def worst_change(variant, cfg):
    rng = random.Random(cfg.seed)
    worst = 0.0
    for _ in range(cfg.cases):
        eq = _equation(rng)
        g = _gauge(rng)
        q0 = am.liouville_invariants(eq, variant).quotient
        q1 = am.liouville_invariants(am.gauge_transform(eq, g), variant).quotient
        for t in cfg.times:
            a, b = eval_scalar(q0, t), eval_scalar(q1, t)
            worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1e-300))
    return worst


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=SelectionConfig.seed)
    ap.add_argument("--cases", type=int, default=SelectionConfig.cases)
    args = ap.parse_args()
    cfg = SelectionConfig(seed=args.seed, cases=args.cases)
    report = {v: worst_change(v, cfg) for v in am.PHI5_VARIANTS}
    report["selected"] = min(am.PHI5_VARIANTS, key=report.get)
    print(json.dumps(report, indent=2))


if __name__ == "__main__":
    main()
