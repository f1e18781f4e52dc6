"""Resolution-of-identity residual per test state as the phase grid is refined."""
from __future__ import annotations

import click
import numpy as np

from collapse_lab.coherent import CoherentFamily, PhaseGrid, PositionGrid, coherent_state, identity_resolution_residual
from collapse_lab.experiments import window_test_states


@click.command()
@click.option("--extent", default=12.0, help="Position half-width L.")
@click.option("--n-points", default=481)
@click.option("--phase-extent", default=6.0, help="Phase half-width Q.")
@click.option("--n-per-axis", default=49)
@click.option("--refinements", default=2)
def main(extent, n_points, phase_extent, n_per_axis, refinements):
    pos = PositionGrid(extent, n_points)
    grid = PhaseGrid(phase_extent, n_per_axis)
    labels = ["origin"] + [f"q={q:g} p={p:g} s={s:g}" for (q, p, s), _ in window_test_states(pos, grid)]
    states = [coherent_state(0, 0, pos)] + [v for _, v in window_test_states(pos, grid)]

    table = []
    sizes = []
    for _ in range(refinements + 1):
        fam = CoherentFamily.build(pos, grid)
        table.append([identity_resolution_residual(fam, [v]) for v in states])
        sizes.append(grid.n_per_axis)
        grid = grid.refined()
    table = np.array(table).T

    click.echo(f"{'state':<24}" + "".join(f"{n:>12d}" for n in sizes) + "  decreasing")
    for label, row in zip(labels, table):
        dec = bool(np.all(np.diff(row) < 0))
        click.echo(f"{label:<24}" + "".join(f"{r:12.3e}" for r in row) + f"  {dec}")


if __name__ == "__main__":
    main()
