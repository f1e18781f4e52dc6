"""Husimi-diagonal change under coarse-graining vs packet width, with the analytic value."""
from __future__ import annotations

import click
import numpy as np

from collapse_lab.coherent import CoherentFamily, PhaseGrid, PositionGrid, gaussian_wavepacket, husimi_equivalence_error
from collapse_lab.hilbert import density


def analytic_error(sigma: float) -> float:
    # Husimi peak 2s/(1+s^2) shrinks by sqrt(ab/((a+1)(b+1))) under one more unit-Gaussian smoothing
    c = 2 * sigma / (1 + sigma ** 2)
    a = (1 + sigma ** 2) / 2
    b = (1 + sigma ** 2) / (2 * sigma ** 2)
    return c * (1 - np.sqrt(a * b / ((a + 1) * (b + 1))))


@click.command()
@click.option("--widths", default="1,2,4,8", help="Comma-separated packet widths.")
@click.option("--extent", default=40.0)
@click.option("--n-points", default=801)
@click.option("--phase-extent", default=16.0)
@click.option("--n-per-axis", default=65)
def main(widths, extent, n_points, phase_extent, n_per_axis):
    pos = PositionGrid(extent, n_points)
    fam = CoherentFamily.build(pos, PhaseGrid(phase_extent, n_per_axis))
    click.echo(f"{'sigma':>6} {'numeric':>10} {'analytic':>10} {'relative':>10}")
    for s in (float(w) for w in widths.split(",")):
        num = husimi_equivalence_error(density(gaussian_wavepacket(0, 0, s, pos)), fam)
        peak = 2 * s / (1 + s ** 2)
        click.echo(f"{s:6g} {num:10.4f} {analytic_error(s):10.4f} {num / peak:10.4f}")


if __name__ == "__main__":
    main()
