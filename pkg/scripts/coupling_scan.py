"""Median over replicas of sup |delta| on [-aN, aN] x [0, bN] along an N grid."""
import argparse
import json
import math

import numpy as np

from kpzlattice.cli import build_rule
from kpzlattice.errors import BlowUpError
from kpzlattice.noise import law_from_spec
from kpzlattice.scaling import coupling_delta
from kpzlattice.stats import replica_seeds


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rule", default='{"name": "custom", "expr": "(u+v)/2 + (u-v)^2/8", "beta": 0.25, "radius": Infinity}',
                    help="rule name or JSON mapping")
    ap.add_argument("--law", default="rademacher")
    ap.add_argument("--convention", default="lse")
    ap.add_argument("--beta", type=float, help="polymer inverse temperature (default: the convention's beta)")
    ap.add_argument("--epsilon", type=float, nargs="+", default=[0.008, 0.25])
    ap.add_argument("--N", type=int, nargs="+", default=[16, 64, 256])
    ap.add_argument("-n", "--replicas", type=int, default=100)
    args = ap.parse_args()
    spec = json.loads(args.rule) if args.rule.lstrip().startswith("{") else args.rule
    rule, law = build_rule(spec), law_from_spec(args.law)
    for eps in args.epsilon:
        meds = []
        for N in args.N:
            seeds = replica_seeds(0, args.replicas, (N,))
            try:
                sups = np.concatenate([
                    coupling_delta(rule, law, N, seeds[i : i + 10], epsilon=eps, convention=args.convention, beta=args.beta).sup_delta
                    for i in range(0, len(seeds), 10)
                ])
            except BlowUpError as exc:
                print(f"eps={eps} N={N}: blow-up: {exc}")
                meds.append(math.nan)
                continue
            meds.append(float(np.median(sups)))
            print(f"eps={eps} N={N}: median sup|delta| = {meds[-1]:.4f} (quartiles {np.quantile(sups, [0.25, 0.75]).round(4).tolist()})")
        trend = all(b < a for a, b in zip(meds, meds[1:]))
        print(f"eps={eps}: strictly decreasing = {trend}")


if __name__ == "__main__":
    main()
