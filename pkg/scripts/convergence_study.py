"""Grid-convergence study on the linear 2D game.

Solves the cost-limited problem at several resolutions, compares {W <= 1}
against the analytic reachable tube and against the classical zero-cost
solve, and prints one row per resolution.

    python scripts/convergence_study.py --sizes 51 101 151 201 251
"""

import argparse
import time

import numpy as np

from hjcrt import (
    Grid, SolveConfig, analytic_rt_linear2d, builtin_linear2d, jaccard_error, rasterize_analytic,
    solve_classical, solve_improved, sublevel,
)
from hjcrt.solver import CLASSICAL


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[51, 101, 151, 201, 251])
    parser.add_argument("--horizon", type=float, default=1.2, help="solve horizon of the improved method")
    parser.add_argument("--level", type=float, default=1.0)
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()

    scn = builtin_linear2d()
    print(f"{'N':>5} {'e_analytic':>11} {'e_classical':>12} {'seconds':>8}")
    errors = []
    for n in args.sizes:
        grid = Grid((-2.0, -2.0), (2.0, 2.0), (n, n))
        t0 = time.perf_counter()
        field = solve_improved(scn, grid, SolveConfig(args.horizon, threads=args.threads)).final_slice
        classical = solve_classical(scn, grid, SolveConfig(args.level, mode=CLASSICAL, threads=args.threads))
        mask = sublevel(field, args.level)
        e_an = jaccard_error(mask, rasterize_analytic(grid, analytic_rt_linear2d))
        e_cl = jaccard_error(mask, sublevel(classical.final_slice, 0.0))
        errors.append(e_an)
        print(f"{n:>5} {e_an:>11.5f} {e_cl:>12.5f} {time.perf_counter() - t0:>8.1f}")
    if len(errors) > 1:
        h = 4.0 / (np.array(args.sizes) - 1)
        print(f"observed order (e_analytic vs cell size): {np.polyfit(np.log(h), np.log(errors), 1)[0]:.2f}")


if __name__ == "__main__":
    main()
