"""Seed-averaged long-time mean of |r|^2 against bath size, for Haar and equatorial baths."""

import argparse
import math

from einselect.analysis import scaling_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-min", type=int, default=4)
    ap.add_argument("--n-max", type=int, default=16)
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--base-seed", type=int, default=0)
    args = ap.parse_args()

    n_list = list(range(args.n_min, args.n_max + 1))
    tables = {
        states: scaling_study(n_list, args.seeds, states=states, base_seed=args.base_seed, threads=args.threads)
        for states in ("haar", "equatorial")
    }
    print(f"{'N':>3} {'haar mean':>14} {'equatorial':>14} {'2^-N':>14}")
    for i, n in enumerate(n_list):
        print(f"{n:>3} {tables['haar'].mean_closed_form[i]:>14.6e} {tables['equatorial'].mean_closed_form[i]:>14.6e} {2.0**-n:>14.6e}")
    print(f"log2 slope  haar={tables['haar'].slope_log2:.4f}  equatorial={tables['equatorial'].slope_log2:.4f}")
    print(f"Haar expectation log2(2/3) = {math.log2(2 / 3):.4f}")


if __name__ == "__main__":
    main()
