"""Flat ``section.key = value`` run configuration.

Example::

    # linear run on the standard square domain
    scenario.name = linear2d
    grid.lo = -2, -2
    grid.hi = 2, 2
    grid.counts = 251, 251
    solve.costs = 0.25, 0.5, 0.75, 1

Blank lines and ``#`` comments are ignored. Values are comma-separated
lists of numbers or words; a single item is a scalar. Every error names the
offending line.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid
from .scenario import BUILTINS, Scenario
from .solver import CLASSICAL, IMPROVED, SCHEMES, UPWIND


class ConfigError(ValueError):
    pass


_BOOL = {"true": True, "yes": True, "on": True, "false": False, "no": False, "off": False}

KNOWN_KEYS = {
    "scenario.name", "scenario.lambda", "scenario.v", "scenario.r",
    "grid.lo", "grid.hi", "grid.counts", "grid.periodic",
    "solve.mode", "solve.costs", "solve.horizons", "solve.epsilon", "solve.cfl", "solve.scheme",
    "solve.lattice", "solve.threads",
    "output.items", "output.render_fixed", "output.render_levels",
    "verify.level", "verify.samples", "verify.tol", "verify.seed",
}

OUTPUT_ITEMS = ("field", "masks", "svg")


def _atom(text: str):
    low = text.lower()
    if low in _BOOL:
        return _BOOL[low]
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


@dataclass
class RawConfig:
    values: dict
    lines: dict
    source: str = "<config>"

    def error(self, key: str, message: str) -> ConfigError:
        where = f"{self.source}:{self.lines[key]}" if key in self.lines else self.source
        return ConfigError(f"{where}: {key}: {message}")

    def get(self, key, default=None):
        return self.values.get(key, default)

    def list(self, key, default=None) -> list:
        value = self.values.get(key, default)
        if value is None:
            return []
        return list(value) if isinstance(value, list) else [value]


def parse_config(text: str, source: str = "<config>") -> RawConfig:
    values: dict = {}
    lines: dict = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{number}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{number}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{number}: duplicate key {key!r} (first on line {lines[key]})")
        items = [item.strip() for item in value.split(",")] if value else []
        if any(item == "" for item in items):
            raise ConfigError(f"{source}:{number}: empty list item in {key!r}")
        parsed = [_atom(item) for item in items]
        values[key] = parsed if (len(parsed) != 1 or "," in value) else parsed[0]
        lines[key] = number
    return RawConfig(values, lines, source)


@dataclass
class RunConfig:
    scenario: Scenario
    grid: Grid
    mode: str = IMPROVED
    costs: list = field(default_factory=list)
    horizons: list = field(default_factory=list)
    epsilon: float | None = None
    cfl: float = 0.5
    scheme: str = UPWIND
    lattice: int | None = None
    threads: int = 1
    outputs: tuple = ("field", "masks")
    render_fixed: dict = field(default_factory=dict)
    render_levels: list = field(default_factory=list)
    verify_level: float | None = None
    verify_samples: int = 200
    verify_tol: float = 0.1
    verify_seed: int = 0


def _numbers(raw: RawConfig, key: str, kind=float) -> list:
    out = []
    for item in raw.list(key):
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise raw.error(key, f"expected numbers, got {item!r}")
        if kind is int and not float(item).is_integer():
            raise raw.error(key, f"expected integers, got {item!r}")
        out.append(kind(item))
    return out


def _scalar(raw: RawConfig, key: str, kind, default):
    if key not in raw.values:
        return default
    values = _numbers(raw, key, kind)
    if len(values) != 1:
        raise raw.error(key, "expected a single number")
    return values[0]


def build_run_config(raw: RawConfig) -> RunConfig:
    name = raw.get("scenario.name")
    if name is None:
        raise ConfigError(f"{raw.source}: missing required key 'scenario.name'")
    if name not in BUILTINS:
        raise raw.error("scenario.name", f"unknown scenario {name!r}; known: {sorted(BUILTINS)}")
    params = {}
    if name == "pursuit":
        for key, arg in (("scenario.lambda", "lam"), ("scenario.v", "v"), ("scenario.r", "r")):
            value = _scalar(raw, key, float, None)
            if value is not None:
                params[arg] = value
    else:
        for key in ("scenario.lambda", "scenario.v", "scenario.r"):
            if key in raw.values:
                raise raw.error(key, f"not a parameter of scenario {name!r}")
    try:
        scenario = BUILTINS[name](**params)
    except ValueError as exc:
        raise raw.error("scenario.name", str(exc)) from exc

    for key in ("grid.lo", "grid.hi", "grid.counts"):
        if key not in raw.values:
            raise ConfigError(f"{raw.source}: missing required key {key!r}")
    lo, hi = _numbers(raw, "grid.lo"), _numbers(raw, "grid.hi")
    counts = _numbers(raw, "grid.counts", int)
    periodic = raw.list("grid.periodic") or [False] * len(counts)
    if any(not isinstance(p, bool) for p in periodic):
        raise raw.error("grid.periodic", "expected true/false per dimension")
    state_dim = scenario.params.get("state_dim", len(counts))
    if len(counts) != state_dim:
        raise raw.error("grid.counts", f"scenario {name!r} has {state_dim} state dimensions, got {len(counts)}")
    try:
        grid = Grid(tuple(lo), tuple(hi), tuple(counts), tuple(periodic))
    except ValueError as exc:
        raise raw.error("grid.counts", str(exc)) from exc

    mode = raw.get("solve.mode", IMPROVED)
    if mode not in (IMPROVED, CLASSICAL):
        raise raw.error("solve.mode", f"expected {IMPROVED!r} or {CLASSICAL!r}, got {mode!r}")
    costs = _numbers(raw, "solve.costs")
    horizons = _numbers(raw, "solve.horizons")
    if mode == IMPROVED:
        if not costs:
            raise (raw.error("solve.costs", "needs at least one admissible cost") if "solve.costs" in raw.values
                   else ConfigError(f"{raw.source}: improved mode needs 'solve.costs'"))
        if any(j <= 0 for j in costs):
            raise raw.error("solve.costs", "admissible costs must be positive")
        if horizons:
            raise raw.error("solve.horizons", "horizons belong to classical mode; use solve.costs")
    else:
        if not horizons:
            raise (raw.error("solve.horizons", "needs at least one horizon") if "solve.horizons" in raw.values
                   else ConfigError(f"{raw.source}: classical mode needs 'solve.horizons'"))
        if any(t <= 0 for t in horizons):
            raise raw.error("solve.horizons", "horizons must be positive")
        if costs:
            raise raw.error("solve.costs", "costs belong to improved mode; use solve.horizons")
    epsilon = _scalar(raw, "solve.epsilon", float, None)
    if epsilon is not None and epsilon <= 0:
        raise raw.error("solve.epsilon", "must be positive")
    cfl = _scalar(raw, "solve.cfl", float, 0.5)
    if not 0 < cfl <= 1:
        raise raw.error("solve.cfl", "must lie in (0, 1]")
    scheme = raw.get("solve.scheme", UPWIND)
    if scheme not in SCHEMES:
        raise raw.error("solve.scheme", f"expected one of {SCHEMES}, got {scheme!r}")
    lattice = _scalar(raw, "solve.lattice", int, None)
    if lattice is not None and lattice < 2:
        raise raw.error("solve.lattice", "needs at least 2 points per channel")
    threads = _scalar(raw, "solve.threads", int, 1)
    if threads < 1:
        raise raw.error("solve.threads", "must be at least 1")

    outputs = tuple(raw.list("output.items", ["field", "masks"]))
    for item in outputs:
        if item not in OUTPUT_ITEMS:
            raise raw.error("output.items", f"unknown output {item!r}; expected {OUTPUT_ITEMS}")
    fixed = {}
    for item in raw.list("output.render_fixed"):
        text = str(item).replace("=", ":")  # accept the CLI's AXIS=VALUE form too
        if ":" not in text:
            raise raw.error("output.render_fixed", f"expected 'axis:value', got {item!r}")
        axis, value = text.split(":", 1)
        try:
            fixed[int(axis)] = float(value)
        except ValueError as exc:
            raise raw.error("output.render_fixed", f"bad assignment {text!r}") from exc
    render_levels = _numbers(raw, "output.render_levels")

    return RunConfig(
        scenario, grid, mode, costs, horizons, epsilon, cfl, scheme, lattice, threads, outputs,
        fixed, render_levels,
        _scalar(raw, "verify.level", float, None),
        _scalar(raw, "verify.samples", int, 200),
        _scalar(raw, "verify.tol", float, 0.1),
        _scalar(raw, "verify.seed", int, 0),
    )


def load_run_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return build_run_config(parse_config(text, str(path)))


def summarize_levels(values) -> str:
    return ",".join(f"{v:g}" for v in np.atleast_1d(values))
