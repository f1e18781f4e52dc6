"""Run every experiment and write one JSON and one CSV report per experiment into a directory."""
from __future__ import annotations

from pathlib import Path

import click

from collapse_lab.config import DEFAULT_SEED, EXPERIMENTS, ExperimentConfig
from collapse_lab.experiments import run
from collapse_lab.report import report_csv, reports_json, write_atomic


@click.command()
@click.argument("outdir", type=click.Path(file_okay=False), default="results")
@click.option("--seed", default=DEFAULT_SEED)
def main(outdir, seed):
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name in EXPERIMENTS:
        rep = run(ExperimentConfig(name, seed=seed))
        write_atomic(out / f"{name}.json", reports_json([rep]))
        write_atomic(out / f"{name}.csv", report_csv(rep))
        click.echo(f"{name:<10} {'pass' if rep.passed else 'FAIL'}")
        for c in rep.checks:
            if not c.passed:
                click.echo(f"    {c.name}: measured {c.measured:.3e}, tolerance {c.tolerance:.1e}")


if __name__ == "__main__":
    main()
