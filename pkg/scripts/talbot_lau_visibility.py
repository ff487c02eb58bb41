"""Fringe visibility and slit licensing in the reference two-grating setup across kernel widths."""

import argparse
import math

from einselect import fringe
from einselect.fringe import DecoherenceKernel, TalbotLauConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--open-fraction", type=float, default=0.3)
    ap.add_argument("--slits", type=int, default=16)
    ap.add_argument("--ppp", type=int, default=32, help="grid points per period")
    ap.add_argument("--widths", type=float, nargs="+", default=[math.inf, 1.0, 1 / 3, 1 / 10, 1 / 30])
    args = ap.parse_args()

    cfg = TalbotLauConfig(open_fraction=args.open_fraction, slit_count=args.slits, points_per_period=args.ppp)
    mid_slit = cfg.grating().windows()[cfg.slit_count // 2]
    print(f"{'l_c/d':>8} {'visibility':>11} {'coh_len':>9} {'slit@mask':>10} {'slit@mask+kernel':>17}")
    for w in args.widths:
        k = DecoherenceKernel.gaussian(w * cfg.period)
        rho = fringe.run_talbot_lau(cfg, k)["at_mask"]
        vis = fringe.intensity_and_visibility(rho, cfg.window).visibility
        ell = fringe.coherence_length(rho).value
        local = fringe.apply_kernel(rho, k)
        v1 = fringe.license_position_claim(rho, mid_slit).verdict
        v2 = fringe.license_position_claim(local, mid_slit).verdict
        print(f"{w:>8.4g} {vis:>11.4f} {ell:>9.4g} {v1:>10} {v2:>17}")


if __name__ == "__main__":
    main()
