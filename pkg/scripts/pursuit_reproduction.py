"""Pursuit-evasion reproduction: cost-limited tubes for lambda = 0 and 0.1.

Runs the one-solve algorithm for both cost weights, the classical baseline
for lambda = 0, reports mask sizes, errors against the baseline, nesting and
cost dominance, then verifies the lambda = 0.1 tube by closed-loop rollouts.
Optionally writes the fields and an SVG slice per cost weight.

    python scripts/pursuit_reproduction.py --n 51
    python scripts/pursuit_reproduction.py --n 101 --out results/pursuit
"""

import argparse
from pathlib import Path

import numpy as np

from hjcrt import (
    Grid, SolveConfig, builtin_pursuit, jaccard_error, nesting_check, run_algorithm1, solve_classical, sublevel,
    verify_crt,
)
from hjcrt import io
from hjcrt.render import render_slice
from hjcrt.sets import dilate
from hjcrt.solver import CLASSICAL


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=51, help="nodes per dimension")
    parser.add_argument("--costs", type=float, nargs="+", default=[0.5, 1.0, 1.5, 2.0])
    parser.add_argument("--samples", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", type=Path, default=None, help="directory for fields and SVG slices")
    args = parser.parse_args()

    grid = Grid((-5.0, -10.0, 0.0), (20.0, 10.0, 2 * np.pi), (args.n,) * 3, (False, False, True))
    costs = sorted(args.costs)
    runs = {}
    for lam in (0.0, 0.1):
        result, masks = run_algorithm1(builtin_pursuit(lam), grid, costs, threads=args.threads)
        runs[lam] = (result, masks)
        print(f"lambda={lam}: horizon {result.final_slice.horizon:.3f}, {result.steps_taken} steps, "
              f"{result.wall_time:.1f} s; nodes per J: {[m.count for m in masks]}")
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            io.write_field(args.out / f"field_lambda{lam:g}.hjrt", result.final_slice)
            (args.out / f"slice_lambda{lam:g}.svg").write_text(render_slice(result.final_slice, {2: 0.0}, costs))

    j_max = costs[-1]
    snaps = tuple(j_max - j for j in costs[:-1])
    classical = solve_classical(builtin_pursuit(0.0), grid,
                                SolveConfig(j_max, mode=CLASSICAL, snapshot_times=snaps, threads=args.threads))
    slices = {**{j: classical.snapshots[j_max - j] for j in costs[:-1]}, j_max: classical.final_slice}
    errors = [jaccard_error(m, sublevel(slices[j], 0.0)) for m, j in zip(runs[0.0][1], costs)]
    print("lambda=0 e_vol vs classical: " + ", ".join(f"J={j:g}:{e:.4f}" for j, e in zip(costs, errors)))

    zero, tenth = runs[0.0][1], runs[0.1][1]
    escapes = [int(np.count_nonzero(b.member & ~dilate(grid, a.member, 1))) for a, b in zip(zero, tenth)]
    print(f"lambda=0.1 nested: {nesting_check(tenth)}; nodes outside lambda=0 mask + 1 cell: {escapes}")

    field = runs[0.1][0].final_slice
    for exclude in (False, True):
        rep = verify_crt(field, builtin_pursuit(0.1), j_max, args.samples, args.seed, exclude_target=exclude)
        print(f"rollouts (exclude target={exclude}): {rep.summary()}")


if __name__ == "__main__":
    main()
