"""Kernel sums C1, C2 and sum of delta^2 as the horizon grows, with tail bounds."""
import argparse

from kpzlattice.walk_kernel import constants_c1_c2


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--horizons", type=int, nargs="+", default=[100, 1000, 10_000, 40_000])
    args = ap.parse_args()
    print(f"{'T':>7} {'C1':>10} {'C2':>10} {'sum_sq':>10} {'C2 tail <=':>11}")
    for T in args.horizons:
        k = constants_c1_c2(T)
        print(f"{T:>7} {k.C1:10.6f} {k.C2:10.6f} {k.sum_sq:10.6f} {k.tail_C2:11.4f}")


if __name__ == "__main__":
    main()
