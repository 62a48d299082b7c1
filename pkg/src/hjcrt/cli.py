"""Command-line entry point: ``hjcrt {run,compare,render,verify}``.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io
from .config import ConfigError, RunConfig, load_run_config
from .grid import ValueField
from .render import RenderError, render_slice
from .rollout import verify_crt
from .scenario import AssumptionError, analytic_rt_linear2d
from .sets import GridMismatchError, rasterize_analytic, sublevel, symmetric_difference_report
from .solver import CLASSICAL, SolveConfig, SolverError, run_algorithm1, solve_classical

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

ANALYTIC = {"linear2d": analytic_rt_linear2d}


class UsageError(Exception):
    pass


def _levels_tag(level: float) -> str:
    return f"{level:g}".replace(".", "p").replace("-", "m")


def _solve(cfg: RunConfig, threads: int | None):
    """Run the configured solve; returns ``(field, masks, wall_time, steps)``."""
    threads = threads or cfg.threads
    if cfg.mode == CLASSICAL:
        t_max = max(cfg.horizons)
        snaps = tuple(sorted({t_max - t for t in cfg.horizons}))
        result = solve_classical(cfg.scenario, cfg.grid, SolveConfig(
            t_max, cfl=cfg.cfl, snapshot_times=snaps, mode=CLASSICAL, threads=threads,
            lattice=cfg.lattice, scheme=cfg.scheme))
        slices = dict(result.snapshots)
        slices[0.0] = result.final_slice
        masks = []
        for horizon in cfg.horizons:
            mask = sublevel(slices[t_max - horizon], 0.0, source=CLASSICAL)
            mask.level = float(horizon)
            masks.append(mask)
    else:
        result, masks = run_algorithm1(cfg.scenario, cfg.grid, cfg.costs, cfg.epsilon, cfl=cfg.cfl,
                                       threads=threads, lattice=cfg.lattice, scheme=cfg.scheme)
    return result.final_slice, masks, result.wall_time, result.steps_taken


def cmd_run(args) -> int:
    cfg = load_run_config(args.config)
    out = io.ensure_dir(args.output_dir)
    field, masks, wall, steps = _solve(cfg, args.threads)
    print(f"solved {cfg.scenario.name} mode={cfg.mode} horizon={field.horizon:g} steps={steps} "
          f"wall_time={wall:.2f}s")
    if "field" in cfg.outputs:
        path = out / "field.hjrt"
        io.write_field(path, field)
        print(f"field {path} nodes={field.grid.size} time_label={field.time_label:g} wall_time={wall:.2f}s")
    if "masks" in cfg.outputs:
        for mask in masks:
            path = out / f"mask_{_levels_tag(mask.level)}.csv"
            io.write_mask(path, mask)
            print(f"mask {path} level={mask.level:g} nodes={mask.count} wall_time={wall:.2f}s")
    if "svg" in cfg.outputs:
        if cfg.render_levels:
            levels = cfg.render_levels
        else:
            levels = [0.0] if cfg.mode == CLASSICAL else [m.level for m in masks]
        path = out / "slice.svg"
        path.write_text(render_slice(field, cfg.render_fixed, levels))
        print(f"svg {path} levels={','.join(f'{v:g}' for v in levels)} wall_time={wall:.2f}s")
    return EXIT_OK


def _as_mask(path: str, level):
    obj = io.read_any(path)
    if isinstance(obj, ValueField):
        if level is None:
            raise UsageError(f"{path} is a field; pass --level to compare its sublevel set")
        return sublevel(obj, level, source=Path(path).name)
    return obj


def cmd_compare(args) -> int:
    a = _as_mask(args.a, args.level)
    if args.analytic:
        if args.b:
            raise UsageError("give either a second input or --analytic, not both")
        if args.analytic not in ANALYTIC:
            raise UsageError(f"no analytic oracle named {args.analytic!r}; known: {sorted(ANALYTIC)}")
        b = rasterize_analytic(a.grid, ANALYTIC[args.analytic], source=f"analytic:{args.analytic}")
    elif args.b:
        b = _as_mask(args.b, args.level_b if args.level_b is not None else args.level)
    else:
        raise UsageError("compare needs a second input or --analytic")
    report = symmetric_difference_report(a, b)
    print(f"e_vol {report['e_vol']:.6f}")
    print(f"sym_diff_nodes {report['sym_diff_nodes']}")
    print(f"count_a {report['count_a']}")
    print(f"count_b {report['count_b']}")
    for axis, (lo, hi) in enumerate(report["bbox"]):
        print(f"bbox_axis{axis} {lo:.6g} {hi:.6g}")
    return EXIT_OK


def _parse_fixed(items) -> dict:
    fixed = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--fix expects AXIS=VALUE, got {item!r}")
        axis, value = item.split("=", 1)
        try:
            fixed[int(axis)] = float(value)
        except ValueError as exc:
            raise UsageError(f"--fix expects AXIS=VALUE, got {item!r}") from exc
    return fixed


def cmd_render(args) -> int:
    obj = io.read_any(args.input)
    levels = [float(v) for v in args.levels.split(",")] if args.levels else []
    if isinstance(obj, ValueField) and not levels:
        raise UsageError("rendering a field needs --levels")
    svg = render_slice(obj, _parse_fixed(args.fix), levels)
    if args.output:
        Path(args.output).write_text(svg)
        print(f"svg {args.output}")
    else:
        sys.stdout.write(svg)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = load_run_config(args.config)
    if args.field:
        field = io.read_field(args.field)
        if field.grid != cfg.grid:
            raise GridMismatchError("field grid differs from the config grid")
    else:
        field, _, _, _ = _solve(cfg, args.threads)
    level = args.level if args.level is not None else cfg.verify_level
    if level is None:
        level = max(cfg.costs) if cfg.costs else None
    if level is None:
        raise UsageError("verify needs --level or verify.level in the config")
    seed = args.seed if args.seed is not None else cfg.verify_seed
    samples = args.samples if args.samples is not None else cfg.verify_samples
    report = verify_crt(field, cfg.scenario, level, samples, seed, tol=cfg.verify_tol)
    text = "\n".join([
        f"scenario {cfg.scenario.name}",
        f"level {report.level:g}",
        f"samples {report.n_samples}",
        f"successes {report.successes}",
        f"success_fraction {report.success_fraction:.6f}",
        f"worst_overshoot {report.worst_overshoot:.6f}",
        f"tol {report.tol:g}",
        f"seed {report.seed}",
    ]) + "\n"
    sys.stdout.write(text)
    if args.output_dir:
        path = io.ensure_dir(args.output_dir) / "verify.txt"
        path.write_text(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hjcrt", description="Cost-limited reachable tubes on a grid.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve a configured problem and write artifacts")
    run.add_argument("--config", required=True)
    run.add_argument("--output-dir", default=".")
    run.add_argument("--threads", type=int, default=None)
    run.add_argument("--seed", type=int, default=None, help="accepted for symmetry; solves are deterministic")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="e_VOL and symmetric difference of two masks or fields")
    cmp_.add_argument("a")
    cmp_.add_argument("b", nargs="?")
    cmp_.add_argument("--level", type=float, default=None, help="sublevel threshold for field inputs")
    cmp_.add_argument("--level-b", type=float, default=None, help="threshold for the second input if different")
    cmp_.add_argument("--analytic", default=None, help="compare against a built-in analytic tube")
    cmp_.set_defaults(func=cmd_compare)

    ren = sub.add_parser("render", help="SVG contour drawing of a 2-D slice")
    ren.add_argument("input")
    ren.add_argument("--fix", action="append", help="AXIS=VALUE; repeat to pin several axes")
    ren.add_argument("--levels", default=None, help="comma-separated contour levels for fields")
    ren.add_argument("--output", default=None)
    ren.set_defaults(func=cmd_render)

    ver = sub.add_parser("verify", help="Monte-Carlo rollout check of a tube")
    ver.add_argument("--config", required=True)
    ver.add_argument("--field", default=None, help="reuse a stored field instead of solving")
    ver.add_argument("--level", type=float, default=None)
    ver.add_argument("--samples", type=int, default=None)
    ver.add_argument("--seed", type=int, default=None)
    ver.add_argument("--threads", type=int, default=None)
    ver.add_argument("--output-dir", default=None)
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if getattr(args, "threads", None) is not None and args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, UsageError, RenderError, GridMismatchError, io.FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, AssumptionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
