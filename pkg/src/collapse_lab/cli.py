"""Command-line front end.

Exit status: 0 all checks pass, 1 a check failed, 2 bad configuration, 3 I/O error.
"""
from __future__ import annotations

import os
import sys
from dataclasses import fields
from pathlib import Path

import click

from .config import (
    DEFAULT_SEED,
    EXPERIMENTS,
    PARAMS,
    ConfigError,
    ExperimentConfig,
    load_config_file,
    make_params,
    validate,
)
from .experiments import run
from .report import report_csv, reports_json, write_atomic

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def _thread_limit():
    n = os.environ.get("COLLAPSE_LAB_THREADS")
    if not n:
        return None
    try:
        n = int(n)
    except ValueError:
        raise ConfigError(f"COLLAPSE_LAB_THREADS must be an integer, got {n!r}") from None
    if n < 1:
        raise ConfigError("COLLAPSE_LAB_THREADS must be >= 1")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def build_configs(experiment: str, config_file, flags: dict, common: dict) -> list[ExperimentConfig]:
    """Merge file values with command-line flags (flags win)."""
    file_cfg = load_config_file(config_file) if config_file else {}
    if file_cfg.get("experiment") not in (None, experiment):
        raise ConfigError(
            f"config file is for {file_cfg['experiment']!r} but {experiment!r} was requested"
        )
    seed = common.get("seed")
    seed = file_cfg.get("seed", DEFAULT_SEED) if seed is None else seed
    fmt = common.get("format") or file_cfg.get("format", "json")
    scale = common.get("tolerance_scale")
    scale = file_cfg.get("tolerance_scale", 1.0) if scale is None else scale
    output = common.get("output") or file_cfg.get("output")
    timing = bool(common.get("timing") or file_cfg.get("timing", False))
    file_params = file_cfg.get("parameters", {})

    names = EXPERIMENTS if experiment == "all" else (experiment,)
    out = []
    for name in names:
        values = dict(file_params.get(name, {})) if experiment == "all" else dict(file_params)
        if experiment != "all":
            values.update({k: v for k, v in flags.items() if v is not None})
        out.append(ExperimentConfig(
            experiment=name,
            parameters=make_params(name, values),
            seed=seed,
            output_path=output,
            output_format=fmt,
            tolerance_scale=scale,
            timing=timing,
        ))
    return out


def _emit(reports, fmt: str, output) -> None:
    if fmt == "json":
        text = reports_json(reports)
        if output:
            write_atomic(output, text)
        else:
            click.echo(text, nl=False)
        return
    if len(reports) == 1:
        text = report_csv(reports[0])
        if output:
            write_atomic(output, text)
        else:
            click.echo(text, nl=False)
        return
    if not output:
        raise ConfigError("csv output for 'all' needs --output (one file per experiment is written)")
    base = Path(output)
    for r in reports:
        write_atomic(base.with_name(f"{base.stem}_{r.experiment}{base.suffix or '.csv'}"), report_csv(r))


def execute(experiment: str, config_file, flags: dict, common: dict) -> int:
    try:
        configs = build_configs(experiment, config_file, flags, common)
        problems = [f"{c.experiment}: {v}" for c in configs for v in validate(c)]
        if problems:
            for v in problems:
                click.echo(f"config error: {v}", err=True)
            return EXIT_CONFIG
        limiter = _thread_limit()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_CONFIG
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        return EXIT_IO
    try:
        reports = [run(c) for c in configs]
    finally:
        if limiter is not None:
            limiter.restore_original_limits()
    try:
        _emit(reports, configs[0].output_format, configs[0].output_path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_CONFIG
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        return EXIT_IO
    for r in reports:
        for c in r.checks:
            if not c.passed:
                click.echo(f"FAIL {r.experiment}: {c.name} (measured {c.measured:.3e}, tolerance {c.tolerance:.1e})", err=True)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def _common_options(f):
    f = click.option("--config", "config_file", type=click.Path(dir_okay=False), help="TOML config file.")(f)
    f = click.option("--output", "-o", help="Write the report here instead of stdout.")(f)
    f = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), help="Report format.")(f)
    f = click.option("--seed", type=int, help=f"Seed for randomized batches [default {DEFAULT_SEED}].")(f)
    f = click.option("--tolerance-scale", type=float, help="Multiply every check tolerance.")(f)
    f = click.option("--timing", is_flag=True, default=None, help="Include wall-clock duration (breaks byte-reproducibility).")(f)
    return f


def _make_command(name: str):
    params_cls = PARAMS[name]

    def callback(config_file, output, fmt, seed, tolerance_scale, timing, **flags):
        common = dict(output=output, format=fmt, seed=seed, tolerance_scale=tolerance_scale, timing=timing)
        sys.exit(execute(name, config_file, flags, common))

    cmd = _common_options(callback)
    for f in reversed(fields(params_cls)):
        cmd = click.option(f"--{f.name.replace('_', '-')}", f.name, default=None,
                           help=f"[default {getattr(params_cls(), f.name)}]")(cmd)
    return click.command(name, help=f"Run the {name} experiment.")(cmd)


@click.group()
def main():
    """Numerical checks of measurement-chain, collapse and coarse-graining relations."""


@main.group("run")
def run_group():
    """Run an experiment and emit its report."""


for _name in EXPERIMENTS:
    run_group.add_command(_make_command(_name))


@run_group.command("all")
@_common_options
def run_all(config_file, output, fmt, seed, tolerance_scale, timing):
    """Run every experiment; parameters come from [parameters.<name>] tables in the config file."""
    common = dict(output=output, format=fmt, seed=seed, tolerance_scale=tolerance_scale, timing=timing)
    sys.exit(execute("all", config_file, {}, common))


@main.command("validate")
@click.argument("experiment", type=click.Choice(EXPERIMENTS + ("all",)))
@click.option("--config", "config_file", type=click.Path(dir_okay=False))
@click.option("--set", "sets", multiple=True, metavar="KEY=VALUE", help="Override a parameter.")
def validate_cmd(experiment, config_file, sets):
    """List configuration violations without running anything."""
    flags = {}
    for item in sets:
        if "=" not in item:
            click.echo(f"config error: --set expects KEY=VALUE, got {item!r}", err=True)
            sys.exit(EXIT_CONFIG)
        k, v = item.split("=", 1)
        flags[k.strip()] = v.strip()
    try:
        configs = build_configs(experiment, config_file, flags, {})
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(EXIT_IO)
    problems = [f"{c.experiment}: {v}" for c in configs for v in validate(c)]
    for v in problems:
        click.echo(v)
    if not problems:
        click.echo("ok")
    sys.exit(EXIT_CONFIG if problems else EXIT_OK)


if __name__ == "__main__":
    main()
