"""Attractor dynamics that sustain ``|0>`` and damp everything orthogonal to it.

The evolution is the contraction ``V(t) = P0 + exp(-rate t) (I - P0)``. It is
not unitary: norm lost from the orthogonal sector is treated as having left
the modeled space.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .coherent import CoherentFamily, coarse_grain, coherent_state
from .hilbert import DensityOperator, HilbertError, StateVector, density

LARGE_TIME = 20.0


@dataclass(frozen=True)
class AttractorEvolution:
    target: StateVector
    rate: float = 1.0

    def __post_init__(self):
        if self.rate <= 0:
            raise HilbertError(f"rate must be positive, got {self.rate}")
        if not self.target.is_normalized():
            raise HilbertError("attractor target must be normalized")

    @classmethod
    def ground(cls, family: CoherentFamily, rate: float = 1.0) -> "AttractorEvolution":
        return cls(coherent_state(0.0, 0.0, family.position_grid), rate)

    @property
    def p0(self) -> np.ndarray:
        v = self.target.amplitudes
        return np.outer(v, v.conj())

    def operator_at(self, t: float) -> np.ndarray:
        if t < 0:
            raise HilbertError(f"negative time {t}")
        p0 = self.p0
        return p0 + np.exp(-self.rate * t) * (np.eye(len(p0)) - p0)

    def evolve(self, rho: DensityOperator, t: float) -> DensityOperator:
        if rho.space != self.target.space:
            raise HilbertError("density operator and attractor live on different spaces")
        v = self.operator_at(t)
        return DensityOperator(rho.space, v @ rho.matrix @ v.conj().T)


def degradation_factor(family: CoherentFamily) -> float:
    """``sum_z w |<0|z>|^4``, the survival weight of ``|0>`` after coarse-graining."""
    zero = coherent_state(0.0, 0.0, family.position_grid)
    overlaps = np.abs(family.amplitudes(zero)) ** 2
    return float(np.sum(family.weights * overlaps ** 2))


def default_sample_points(extent: float = 1.0, n: int = 3) -> list[tuple[float, float]]:
    axis = np.linspace(-extent, extent, n)
    return [(float(q), float(p)) for q, p in product(axis, axis)]


@dataclass(frozen=True)
class SurvivalReport:
    time: float
    rate: float
    degradation_factor: float
    samples: list[tuple[float, float]]
    direct: np.ndarray = field(repr=False)
    grained: np.ndarray = field(repr=False)
    control: np.ndarray = field(repr=False)
    ratio_grained: np.ndarray = field(repr=False)
    ratio_control: np.ndarray = field(repr=False)
    mask: np.ndarray = field(repr=False)
    max_relative_error: float
    passed: bool


def survival_experiment(
    rho0: DensityOperator,
    family: CoherentFamily,
    t: float = LARGE_TIME,
    rate: float = 1.0,
    samples=None,
    tol: float = 1e-3,
    floor: float = 1e-8,
) -> SurvivalReport:
    """Compare evolving ``rho0`` against evolving its coarse-grained image.

    Over every pair of sample points the grained matrix element should be the
    direct one times the degradation factor; the relative error is taken only
    where ``|direct| > floor``.
    """
    samples = default_sample_points() if samples is None else [tuple(map(float, s)) for s in samples]
    evo = AttractorEvolution.ground(family, rate)
    factor = degradation_factor(family)

    direct = family.matrix_elements(evo.evolve(rho0, t), samples)
    grained = family.matrix_elements(evo.evolve(coarse_grain(rho0, family), t), samples)
    # control arm: the same evolution with coarse-graining skipped
    control = family.matrix_elements(evo.evolve(rho0, t), samples)

    mask = np.abs(direct) > floor
    ratio_g = np.full(direct.shape, np.nan, dtype=np.complex128)
    ratio_c = np.full(direct.shape, np.nan, dtype=np.complex128)
    ratio_g[mask] = grained[mask] / direct[mask]
    # complex division x / x is not exactly 1 in floating point
    ratio_c[mask] = np.where(control[mask] == direct[mask], 1.0, control[mask] / direct[mask])
    rel = np.abs(ratio_g[mask] - factor) / factor
    max_rel = float(rel.max()) if rel.size else float("nan")
    return SurvivalReport(
        time=float(t),
        rate=float(rate),
        degradation_factor=factor,
        samples=samples,
        direct=direct,
        grained=grained,
        control=control,
        ratio_grained=ratio_g,
        ratio_control=ratio_c,
        mask=mask,
        max_relative_error=max_rel,
        passed=bool(rel.size) and max_rel <= tol and bool(np.all(ratio_c[mask] == 1.0)),
    )


def ground_density(family: CoherentFamily) -> DensityOperator:
    return density(coherent_state(0.0, 0.0, family.position_grid))
