"""Monte Carlo mean of Y(x, t) against V t/N, the three-pairing constant and the exact finite-N mean."""
import argparse
import math

import numpy as np

from kpzlattice.cli import build_rule
from kpzlattice.noise import law_from_spec, sample_sheet
from kpzlattice.renorm import compute_constants, expected_y, k_from_sheet, y_field
from kpzlattice.stats import replica_seeds


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rule", default="kpz-quadratic")
    ap.add_argument("--law", default="rademacher")
    ap.add_argument("--convention", default="paper")
    ap.add_argument("--epsilon", type=float, nargs="+", default=[0.008, 0.1, 0.25])
    ap.add_argument("--N", type=int, nargs="+", default=[16, 64, 256])
    ap.add_argument("-n", "--replicas", type=int, default=4000)
    args = ap.parse_args()
    rule, law = build_rule(args.rule), law_from_spec(args.law)
    beta, c = rule.constants(args.convention)
    print(f"{'eps':>6} {'N':>5} {'mean Y':>10} {'stderr':>8} {'exact':>10} {'V t/N':>10} {'Vwick t/N':>10}")
    for eps in args.epsilon:
        for N in args.N:
            T = N
            seeds = replica_seeds(0, args.replicas, (N,))
            ys = []
            for i in range(0, len(seeds), 200):
                sheet = sample_sheet(law, seeds[i : i + 200], T + 8, T)
                ys.append(y_field(k_from_sheet(sheet, beta, N, eps), c, beta).at(1, T))
            y = np.concatenate(ys)
            k = compute_constants(rule, law, N, convention=args.convention)
            exact = expected_y(rule, law, N, T, eps, convention=args.convention)
            print(f"{eps:6.3f} {N:5d} {y.mean():10.4f} {y.std(ddof=1) / math.sqrt(y.size):8.4f} {exact:10.4f} "
                  f"{k.V * T / N:10.4f} {k.V_wick * T / N:10.4f}")


if __name__ == "__main__":
    main()
