"""Fitted short-time decay rate against the closed-form rate for growing baths."""

import argparse

from einselect.analysis import curvature_rate, gaussian_rate
from einselect.spinbath import env_random


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 20, 50, 100, 200, 500])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--fit-fraction", type=float, default=1.0)
    args = ap.parse_args()

    print(f"{'N':>5} {'gamma_fit':>12} {'gamma_theory':>13} {'curvature':>12} {'rel_err':>9}")
    for n in args.sizes:
        env = env_random(n, args.seed)
        fit = gaussian_rate(env, args.fit_fraction)
        print(f"{n:>5} {fit.gamma:>12.6f} {fit.gamma_theory:>13.6f} {curvature_rate(env):>12.6f} {fit.gamma / fit.gamma_theory - 1:>9.2e}")


if __name__ == "__main__":
    main()
