"""Record, stability and content scores over measurement directions for a decohered bath."""

import argparse
import math

import numpy as np

from einselect.analysis import gamma_theory
from einselect.content import MagnitudeClaim, claim_content
from einselect.spinbath import Direction, ModelSpec, QubitAmplitudes, env_random


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=50)
    ap.add_argument("--seed", type=int, default=4)
    ap.add_argument("--pop-up", type=float, default=0.7, help="|a|^2 of the system state")
    ap.add_argument("--decay-multiple", type=float, default=10.0, help="t = multiple / Gamma")
    ap.add_argument("--steps", type=int, default=19)
    ap.add_argument("--chi", type=float, default=0.0)
    args = ap.parse_args()

    env = env_random(args.n, args.seed)
    model = ModelSpec(QubitAmplitudes(math.sqrt(args.pop_up), math.sqrt(1 - args.pop_up)), env)
    t = args.decay_multiple / gamma_theory(env)
    print("psi,R,S,content,closed_form_R")
    for psi in np.linspace(0, math.pi / 2, args.steps):
        rep = claim_content(model, MagnitudeClaim.spin(Direction(psi, args.chi)), t, t, 32)
        s2 = math.sin(psi) ** 2
        closed = 1 - s2 / math.sqrt(1 - s2 * (1 - s2))
        print(f"{psi:.6f},{rep.record_score:.10f},{rep.stability_score:.10f},{rep.content:.10f},{closed:.10f}")


if __name__ == "__main__":
    main()
