"""1D transition profiles for several p: energy, width and symmetry.

For p = 2 the energy is compared with 8/3, the energy of tanh.

    python scripts/heteroclinic_profiles.py --p 1.5 2 3 4
"""

import argparse

import numpy as np

from tracephase.model import standard_well
from tracephase.solver import SolveOptions, heteroclinic_1d


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, nargs="+", default=[1.5, 2.0, 3.0, 4.0])
    ap.add_argument("--L", type=float, default=10.0)
    ap.add_argument("--h", type=float, default=0.05)
    args = ap.parse_args()

    print(f"{'p':>5} {'energy':>10} {'width':>8} {'odd err':>10} {'iters':>7} conv")
    for p in args.p:
        opts = SolveOptions(max_iters=40000, tol=1e-12, step0=1e-3,
                            delta=0.0 if p >= 2 else 1e-3)
        prof = heteroclinic_1d(p, standard_well(p), args.L, args.h, options=opts)
        # width: distance between the -0.9 and +0.9 crossings
        lo, hi = np.interp([-0.9, 0.9], prof.u, prof.t)
        odd = float(np.max(np.abs(prof.u + prof.u[::-1])))
        print(f"{p:5.2f} {prof.energy:10.6f} {hi - lo:8.4f} {odd:10.2e} "
              f"{len(prof.log.rows) - 1:7d} {prof.log.converged}")
        if p == 2.0:
            print(f"      8/3 = {8 / 3:.6f}, sup|u - tanh| = "
                  f"{np.max(np.abs(prof.u - np.tanh(prof.t))):.2e}")


if __name__ == "__main__":
    main()
