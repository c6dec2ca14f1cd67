"""Energy and density scaling of the planar interface crossing the trace.

Minimizes on [-L, L] x [0, L] with lateral faces pinned, then prints
E_R, V_R, A_R and the fitted log-log exponents.

    python scripts/planar_scaling.py --half 64 --h 0.25
"""

import argparse
import time

from tracephase.domain import HalfSpaceGrid
from tracephase.estimates import scan
from tracephase.model import standard_well, well_by_name
from tracephase.solver import SolveOptions, minimize, planar_interface


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--half", type=float, default=64.0)
    ap.add_argument("--h", type=float, default=0.25)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--well", default="standard-p")
    ap.add_argument("--delta", type=float, default=None)
    args = ap.parse_args()

    grid = HalfSpaceGrid.from_bounds((-args.half, 0.0), (args.half, args.half), args.h)
    well = well_by_name(args.well, p=args.p) if args.well != "standard-p2" else standard_well(2.0)
    delta = args.delta if args.delta is not None else (0.0 if well.p >= 2 else 1e-3)
    start = time.perf_counter()
    field, log = minimize(grid, planar_interface(grid), well,
                          SolveOptions(max_iters=20000, pinned=("left", "right"), delta=delta))
    print(f"grid {grid.counts} h={grid.h}  converged={log.converged} "
          f"iters={len(log.rows) - 1}  {time.perf_counter() - start:.1f}s")

    radii = [args.half / 2 ** k for k in range(3, -1, -1)]
    rep = scan(grid, field, well, 0.0, (0.0, 0.0), radii)
    print(f"{'R':>8} {'E_R':>12} {'V_R':>12} {'A_R':>12} {'V_R/R^2':>10}")
    for r, e, v, a in zip(rep.radii, rep.E, rep.V, rep.A):
        print(f"{r:8.2f} {e:12.4f} {v:12.4f} {a:12.4f} {v / r ** 2:10.4f}")
    print(f"exponents: E {rep.fitted_exponent_E:.4f}  V {rep.fitted_exponent_V:.4f}  "
          f"A {rep.fitted_exponent_A:.4f}  r0={rep.r0}")


if __name__ == "__main__":
    main()
