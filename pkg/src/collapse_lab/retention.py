"""Branch-information retention under classical vs superposition projectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import InvariantError
from .hilbert import (
    TOL_NORM,
    DensityOperator,
    Projector,
    StateVector,
    TensorSpace,
    event_probability,
    density,
    lift_to_space,
    outer_projector,
)

RETENTION_SPACE = TensorSpace.of(("phi", ("1", "2")), ("chi", ("1", "2")))
_MACRO = TensorSpace((RETENTION_SPACE.factor("phi"),))


@dataclass(frozen=True)
class RetentionSpec:
    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        for name, (u, v) in (("|a|^2 + |b|^2", (self.a, self.b)), ("|c|^2 + |d|^2", (self.c, self.d))):
            s = abs(u) ** 2 + abs(v) ** 2
            if abs(s - 1) > TOL_NORM:
                raise InvariantError(f"{name} = {s:.12g}, expected 1")

    @classmethod
    def real(cls, a_sq: float, c: float) -> "RetentionSpec":
        """Real amplitudes from ``|a|^2`` and ``c`` in [0, 1]."""
        return cls(np.sqrt(a_sq), np.sqrt(1 - a_sq), c, np.sqrt(max(0.0, 1 - c * c)))

    @classmethod
    def random(cls, rng: np.random.Generator) -> "RetentionSpec":
        u = rng.normal(size=4) + 1j * rng.normal(size=4)
        u[:2] /= np.linalg.norm(u[:2])
        u[2:] /= np.linalg.norm(u[2:])
        return cls(*map(complex, u))


def build_entangled_state(spec: RetentionSpec) -> StateVector:
    # phi-major ordering: |phi_1 chi_1> is index 0, |phi_2 chi_2> is index 3
    return StateVector(RETENTION_SPACE, [spec.a, 0, 0, spec.b])


def superposition_projector(spec: RetentionSpec) -> Projector:
    macro = StateVector(_MACRO, [spec.c, spec.d])
    return lift_to_space(outer_projector(macro), RETENTION_SPACE, "phi")


def decohered_mixture(spec: RetentionSpec) -> DensityOperator:
    return DensityOperator(
        RETENTION_SPACE, np.diag([abs(spec.a) ** 2, 0, 0, abs(spec.b) ** 2])
    )


def retention_value(spec: RetentionSpec) -> float:
    return abs(spec.a) ** 2 * abs(spec.c) ** 2 + abs(spec.b) ** 2 * abs(spec.d) ** 2


def retention_identity(spec: RetentionSpec) -> tuple[float, float]:
    """``(Tr P rho, Tr P rho')`` for the pure entangled state and its decohered mixture."""
    p = superposition_projector(spec)
    return (
        event_probability(p, density(build_entangled_state(spec))),
        event_probability(p, decohered_mixture(spec)),
    )


def sensitivity(c: float) -> float:
    """Analytic ``d Tr(P rho) / d|a|^2 = |c|^2 - |d|^2`` for real ``c`` in [0, 1]."""
    return 2 * c * c - 1


def sensitivity_fd(c: float, a_sq: float = 0.5, step: float = 1e-4) -> float:
    """Central finite difference of the numerically traced ``Tr P rho`` in ``|a|^2``."""
    hi, _ = retention_identity(RetentionSpec.real(a_sq + step, c))
    lo, _ = retention_identity(RetentionSpec.real(a_sq - step, c))
    return (hi - lo) / (2 * step)


@dataclass(frozen=True)
class SweepRow:
    c: float
    sensitivity: float
    sensitivity_fd: float
    tr_p_rho_analytic: float
    tr_p_rho_numeric: float


SWEEP_COLUMNS = ("c", "sensitivity", "tr_p_rho_analytic", "tr_p_rho_numeric", "sensitivity_fd")


def sensitivity_sweep(c_grid, a_sq: float = 0.36) -> list[SweepRow]:
    rows = []
    for c in c_grid:
        c = float(c)
        if not 0.0 <= c <= 1.0:
            raise InvariantError(f"sweep value c = {c} outside [0, 1]")
        spec = RetentionSpec.real(a_sq, c)
        rows.append(SweepRow(
            c=c,
            sensitivity=sensitivity(c),
            sensitivity_fd=sensitivity_fd(c),
            tr_p_rho_analytic=retention_value(spec),
            tr_p_rho_numeric=retention_identity(spec)[0],
        ))
    return rows


def sweep_grid(n: int) -> np.ndarray:
    """``n`` points in [0, 1] with ``1/sqrt(2)`` forced in (it replaces the nearest point)."""
    grid = np.linspace(0.0, 1.0, n)
    if n >= 3:
        k = int(np.argmin(np.abs(grid[1:-1] - 1 / np.sqrt(2)))) + 1
        grid[k] = 1 / np.sqrt(2)
    return grid
