"""How often each rule leaves its monotone range, by N and noise law.

A rule f = (a+b)/2 + phi(b-a) is order preserving only while |phi'(b-a)| <= 1/2;
past that point height differences amplify and the recursion diverges.
"""
import argparse
import math

import numpy as np

from kpzlattice.errors import BlowUpError
from kpzlattice.noise import law_from_spec, sample_sheet
from kpzlattice.stats import replica_seeds
from kpzlattice.surface import grow, named_rule

RULES = {
    "kpz-quadratic": lambda: named_rule("kpz-quadratic", radius=math.inf),
    "kpz-sqrt": lambda: named_rule("kpz-sqrt", radius=math.inf),
    "u^2/2": lambda: named_rule("custom", expr="(u+v)/2 + (u-v)^2/2", beta=1.0, radius=math.inf),
    "u^2/8": lambda: named_rule("custom", expr="(u+v)/2 + (u-v)^2/8", beta=0.25, radius=math.inf),
    "polymer(1)": lambda: named_rule("polymer", beta=1.0),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, nargs="+", default=[16, 64, 256])
    ap.add_argument("--law", default="rademacher")
    ap.add_argument("-n", "--replicas", type=int, default=20)
    args = ap.parse_args()
    law = law_from_spec(args.law)
    print(f"law {args.law}: share of replicas that diverge by t = N, median of max |b - a| over the last row")
    for name, make in RULES.items():
        rule = make()
        cells = []
        for N in args.N:
            blown, spread = 0, []
            for seed in replica_seeds(1, args.replicas, (N,)):
                try:
                    with np.errstate(all="ignore"):
                        row = grow(rule, sample_sheet(law, seed, 2 * N, N), N, "logmgf").heights[-1]
                except BlowUpError:
                    blown += 1
                    continue
                row = row[~np.isnan(row)]
                spread.append(np.max(np.abs(np.diff(row))))
            med = f"{np.median(spread):.3g}" if spread else "-"
            cells.append(f"N={N}: {blown / args.replicas:.2f} / {med}")
        print(f"{name:14s} " + "   ".join(cells))

if __name__ == "__main__":
    main()
