"""Discrete Lipschitz constant of the planar minimizer under grid refinement.

Whether max |u(x + h e_i) - u(x)| / h stays bounded as h -> 0 is an
empirical question; this prints it next to the energy on a fixed box.

    python scripts/lipschitz_refinement.py --half 16 --h 0.5 0.25 0.125 0.0625
"""

import argparse

from tracephase.domain import HalfSpaceGrid
from tracephase.energy import energy, lipschitz_constant
from tracephase.model import standard_well
from tracephase.solver import SolveOptions, minimize, planar_interface


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--half", type=float, default=16.0)
    ap.add_argument("--h", type=float, nargs="+", default=[0.5, 0.25, 0.125, 0.0625])
    ap.add_argument("--p", type=float, default=2.0)
    args = ap.parse_args()

    well = standard_well(args.p)
    delta = 0.0 if args.p >= 2 else 1e-3
    print(f"{'h':>8} {'nodes':>9} {'Lipschitz':>10} {'trace slope':>12} {'energy':>10} conv")
    for h in args.h:
        grid = HalfSpaceGrid.from_bounds((-args.half, 0.0), (args.half, args.half), h)
        f, log = minimize(grid, planar_interface(grid), well,
                          SolveOptions(max_iters=50000, pinned=("left", "right"), delta=delta))
        # steepest slope along the trace row, where the boundary term acts
        row = f.values[:, 0]
        trace_slope = float(abs(row[1:] - row[:-1]).max()) / h
        e = energy(grid, f, well).total
        print(f"{h:8.4f} {f.values.size:9d} {lipschitz_constant(f):10.4f} {trace_slope:12.4f} "
              f"{e:10.4f} {log.converged}")


if __name__ == "__main__":
    main()
