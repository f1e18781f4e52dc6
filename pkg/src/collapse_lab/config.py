"""Experiment configuration: per-experiment parameter dataclasses, TOML loading, validation."""
from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .coherent import PhaseGrid, PositionGrid, grid_violations

EXPERIMENTS = ("chain", "observers", "coherent", "survival", "retention")
FORMATS = ("json", "csv")
DEFAULT_SEED = 20240917
TOL_UNIT = 1e-9


class ConfigError(ValueError):
    pass


@dataclass
class ChainParams:
    a: complex = 0.6
    b: complex = 0.8
    levels: int = 8
    trials: int = 100


@dataclass
class ObserversParams:
    a: complex = 0.6
    b: complex = 0.8
    e: complex = 0.5
    f: complex = math.sqrt(0.75)
    g: complex = 0.6
    h: complex = 0.8j
    p: complex = 0.8
    q: complex = -0.6
    r: complex = math.sqrt(0.5)
    s: complex = math.sqrt(0.5)
    tag: str = "1x"
    trials: int = 1000


@dataclass
class CoherentParams:
    extent: float = 12.0
    n_points: int = 481
    phase_extent: float = 6.0
    n_per_axis: int = 49
    refinements: int = 2
    # larger grid for wide packets
    wide_extent: float = 40.0
    wide_points: int = 801
    wide_phase_extent: float = 16.0
    wide_per_axis: int = 65
    wide_width: float = 4.0
    widths: list = field(default_factory=lambda: [2.0, 4.0, 8.0])


@dataclass
class SurvivalParams:
    rate: float = 1.0
    time: float = 20.0
    extent: float = 12.0
    n_points: int = 481
    phase_extent: float = 6.0
    n_per_axis: int = 49
    sample_extent: float = 1.0
    sample_points: int = 3


@dataclass
class RetentionParams:
    a: complex = 0.6
    b: complex = 0.8
    c: complex = math.sqrt(0.5)
    d: complex = math.sqrt(0.5)
    sweep: int = 21
    trials: int = 1000


PARAMS = {
    "chain": ChainParams,
    "observers": ObserversParams,
    "coherent": CoherentParams,
    "survival": SurvivalParams,
    "retention": RetentionParams,
}


@dataclass
class ExperimentConfig:
    experiment: str
    parameters: Any = None
    seed: int = DEFAULT_SEED
    output_path: str | None = None
    output_format: str = "json"
    tolerance_scale: float = 1.0
    timing: bool = False

    def __post_init__(self):
        if self.parameters is None and self.experiment in PARAMS:
            self.parameters = PARAMS[self.experiment]()


def parse_value(kind, raw):
    """Coerce a flag or TOML value to the declared field type."""
    if kind in ("complex", complex):
        if isinstance(raw, (list, tuple)) and len(raw) == 2:
            return complex(float(raw[0]), float(raw[1]))
        if isinstance(raw, str):
            return complex(raw.replace(" ", "").replace("i", "j"))
        return complex(raw)
    if kind in ("int", int):
        if isinstance(raw, float) and not raw.is_integer():
            raise ValueError(f"{raw} is not an integer")
        return int(raw)
    if kind in ("float", float):
        return float(raw)
    if kind in ("str", str):
        return str(raw)
    if kind in ("list", list):
        if isinstance(raw, str):
            return [float(t) for t in raw.split(",") if t.strip()]
        return [float(t) for t in raw]
    raise ValueError(f"unsupported field type {kind!r}")


def make_params(experiment: str, values: dict, base=None):
    """Parameter dataclass for ``experiment`` with ``values`` applied over ``base``."""
    cls = PARAMS[experiment]
    params = dataclasses.replace(base) if base is not None else cls()
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise ConfigError(f"unknown parameter(s) for {experiment}: {', '.join(unknown)}")
    for k, v in values.items():
        try:
            setattr(params, k, parse_value(known[k].type, v))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {experiment}.{k}: {v!r} ({exc})") from None
    return params


_TOP_KEYS = {"experiment", "seed", "output", "format", "tolerance_scale", "timing", "parameters"}


def load_config_file(path) -> dict:
    """Read a TOML config. Unknown top-level keys are rejected.

    Layout::

        experiment = "chain"
        seed = 7
        [parameters]
        a = 0.6
        b = "0.8j"
    """
    try:
        with open(Path(path), "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    unknown = sorted(set(raw) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {', '.join(unknown)}")
    return raw


def _unit(name, *amps):
    s = sum(abs(complex(x)) ** 2 for x in amps)
    if abs(s - 1) > TOL_UNIT:
        return [f"normalization constraint {name} = 1 violated (got {s:.6g})"]
    return []


def validate(config: ExperimentConfig) -> list[str]:
    """All invariant violations of ``config``; an empty list means it is runnable."""
    out = []
    if config.experiment not in EXPERIMENTS + ("all",):
        return [f"unknown experiment {config.experiment!r}; choose from {', '.join(EXPERIMENTS + ('all',))}"]
    if config.output_format not in FORMATS:
        out.append(f"output format {config.output_format!r} not in {FORMATS}")
    if not config.tolerance_scale > 0:
        out.append(f"tolerance scale must be positive, got {config.tolerance_scale}")
    if not isinstance(config.seed, int) or config.seed < 0:
        out.append(f"seed must be a non-negative integer, got {config.seed!r}")
    if config.experiment == "all":
        return out
    p = config.parameters
    exp = config.experiment
    if exp == "chain":
        out += _unit("|a|^2 + |b|^2", p.a, p.b)
        if not 2 <= p.levels <= 20:
            out.append(f"levels must be in 2..20, got {p.levels}")
        if p.trials < 1:
            out.append("trials must be >= 1")
    elif exp == "observers":
        for name, pair in (("|a|^2 + |b|^2", (p.a, p.b)), ("|e|^2 + |f|^2", (p.e, p.f)),
                           ("|g|^2 + |h|^2", (p.g, p.h)), ("|p|^2 + |q|^2", (p.p, p.q)),
                           ("|r|^2 + |s|^2", (p.r, p.s))):
            out += _unit(name, *pair)
        if p.tag not in ("1x", "1y", "2u", "2v"):
            out.append(f"tag {p.tag!r} is not an observer-a brain tag")
        if p.trials < 1:
            out.append("trials must be >= 1")
    elif exp in ("coherent", "survival"):
        out += _grid_checks(p.extent, p.n_points, p.phase_extent, p.n_per_axis)
        if exp == "coherent":
            out += _grid_checks(p.wide_extent, p.wide_points, p.wide_phase_extent, p.wide_per_axis, "wide ")
            if p.refinements < 1:
                out.append("refinements must be >= 1")
            if not p.widths or min(p.widths) <= 0:
                out.append("widths must be a non-empty list of positive numbers")
            elif max(list(p.widths) + [p.wide_width]) * 5 > p.wide_extent:
                out.append("wide extent must cover 5 widths of every wide packet")
        else:
            if p.rate <= 0:
                out.append(f"rate must be positive, got {p.rate}")
            if p.time < 0:
                out.append(f"time must be non-negative, got {p.time}")
            if p.sample_points < 1 or p.sample_extent < 0 or p.sample_extent + 5 > p.extent:
                out.append("sample points must lie inside the position grid support")
    elif exp == "retention":
        out += _unit("|a|^2 + |b|^2", p.a, p.b)
        out += _unit("|c|^2 + |d|^2", p.c, p.d)
        if p.sweep < 2:
            out.append("sweep needs at least 2 points")
        if p.trials < 1:
            out.append("trials must be >= 1")
    return out


def _grid_checks(extent, n_points, phase_extent, n_per_axis, prefix="") -> list[str]:
    out = []
    if n_points < 3 or n_points % 2 == 0:
        return [f"{prefix}n_points must be odd and >= 3, got {n_points}"]
    if extent <= 0 or phase_extent <= 0 or n_per_axis < 2:
        return [f"{prefix}grid extents must be positive and n_per_axis >= 2"]
    return [prefix + v for v in grid_violations(PositionGrid(extent, n_points), PhaseGrid(phase_extent, n_per_axis))]
