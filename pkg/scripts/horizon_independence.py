"""How much does {W <= J} move when the solve horizon grows?

Solves the linear 2D game for several horizons at each resolution and
reports, relative to the shortest horizon, the symmetric difference of the
J-masks, how many of those nodes lie beyond a 1- and 2-cell boundary band,
and the analytic-oracle error of each mask.

    python scripts/horizon_independence.py --sizes 51 101 251 --horizons 1.2 2 3
"""

import argparse

import numpy as np

from hjcrt import Grid, SolveConfig, analytic_rt_linear2d, builtin_linear2d, jaccard_error, rasterize_analytic, solve_improved, sublevel
from hjcrt.sets import boundary_band


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[51, 101])
    parser.add_argument("--horizons", type=float, nargs="+", default=[1.2, 2.0])
    parser.add_argument("--level", type=float, default=1.0)
    parser.add_argument("--cfl", type=float, default=0.5)
    args = parser.parse_args()

    scn = builtin_linear2d()
    print(f"{'N':>5} {'horizon':>8} {'nodes':>7} {'e_analytic':>11} {'sym_diff':>9} {'>1 cell':>8} {'>2 cells':>9}")
    for n in args.sizes:
        grid = Grid((-2.0, -2.0), (2.0, 2.0), (n, n))
        analytic = rasterize_analytic(grid, analytic_rt_linear2d)
        ref = None
        for horizon in sorted(args.horizons):
            mask = sublevel(solve_improved(scn, grid, SolveConfig(horizon, cfl=args.cfl)).final_slice, args.level)
            ref = ref or mask
            diff = mask.member ^ ref.member
            beyond = [int(np.count_nonzero(diff & ~boundary_band(ref, c))) for c in (1, 2)]
            print(f"{n:>5} {horizon:>8.2f} {mask.count:>7} {jaccard_error(mask, analytic):>11.5f} "
                  f"{int(diff.sum()):>9} {beyond[0]:>8} {beyond[1]:>9}")


if __name__ == "__main__":
    main()
