"""Coherent states on a position grid and the coarse-graining channel.

Wave functions are sampled on a uniform grid ``x_k`` and stored with a
``sqrt(dx)`` factor folded in, so that the plain vector inner product of
two stored states equals the Riemann-sum approximation of the continuum
inner product. Density-operator matrices are correspondingly
``<x_k|rho|x_l> dx`` and the plain matrix trace is the quadrature trace.

Phase-space sums use the composite trapezoid rule on ``[-Q, Q]^2``: interior
points carry ``dq dp / 2 pi``, edge points half that, corners a quarter.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .hilbert import DensityOperator, DimensionError, HilbertError, StateVector, TensorSpace

MAX_SPACING = 0.1
TAIL_MARGIN = 6.0
SUPPORT_WIDTHS = 5.0
HUSIMI_CLAMP = -1e-10


class GridError(HilbertError):
    pass


@dataclass(frozen=True)
class PositionGrid:
    extent: float = 12.0
    n_points: int = 481

    def __post_init__(self):
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise GridError(f"n_points must be odd and >= 3, got {self.n_points}")
        if self.extent <= 0:
            raise GridError(f"extent must be positive, got {self.extent}")

    @property
    def spacing(self) -> float:
        return 2 * self.extent / (self.n_points - 1)

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.n_points)

    @cached_property
    def space(self) -> TensorSpace:
        return TensorSpace.of(("x", self.n_points))


@dataclass(frozen=True)
class PhaseGrid:
    extent: float = 6.0
    n_per_axis: int = 49

    def __post_init__(self):
        if self.n_per_axis < 2:
            raise GridError(f"n_per_axis must be >= 2, got {self.n_per_axis}")
        if self.extent <= 0:
            raise GridError(f"extent must be positive, got {self.extent}")

    @property
    def spacing(self) -> float:
        return 2 * self.extent / (self.n_per_axis - 1)

    @property
    def weight(self) -> float:
        """Interior quadrature weight ``dq dp / 2 pi``."""
        return self.spacing ** 2 / (2 * np.pi)

    @cached_property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.n_per_axis)

    @cached_property
    def points(self) -> np.ndarray:
        """``(n_per_axis**2, 2)`` array of (q, p), q-major."""
        qq, pp = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.column_stack([qq.ravel(), pp.ravel()])

    @cached_property
    def weights(self) -> np.ndarray:
        w1 = np.ones(self.n_per_axis)
        w1[0] = w1[-1] = 0.5
        return np.outer(w1, w1).ravel() * self.weight

    def refined(self) -> "PhaseGrid":
        """Same extent, half the spacing."""
        return PhaseGrid(self.extent, 2 * self.n_per_axis - 1)


def grid_violations(position: PositionGrid, phase: PhaseGrid | None = None) -> list[str]:
    out = []
    if position.spacing > MAX_SPACING + 1e-12:
        out.append(
            f"position spacing dx = {position.spacing:.4g} violates dx <= {MAX_SPACING}"
        )
    if phase is not None and position.extent < phase.extent + TAIL_MARGIN - 1e-12:
        out.append(
            f"position extent L = {position.extent:g} violates L >= Q + {TAIL_MARGIN:g} "
            f"with Q = {phase.extent:g}"
        )
    return out


def _sample(grid: PositionGrid, q: float, p: float, sigma: float) -> np.ndarray:
    x = grid.x
    psi = np.exp(1j * p * x - (x - q) ** 2 / (2 * sigma ** 2)) * np.sqrt(grid.spacing)
    return psi / np.linalg.norm(psi)


def coherent_state(q: float, p: float, grid: PositionGrid) -> StateVector:
    """Minimum-uncertainty packet centred at (q, p), quadrature-normalized."""
    if abs(q) + SUPPORT_WIDTHS > grid.extent:
        raise GridError(f"coherent state at q = {q:g} is not supported inside [-{grid.extent:g}, {grid.extent:g}]")
    return StateVector(grid.space, _sample(grid, q, p, 1.0))


def gaussian_wavepacket(q: float, p: float, sigma: float, grid: PositionGrid) -> StateVector:
    """Gaussian packet of position width ``sigma``; ``sigma = 1`` is the coherent state."""
    if sigma <= 0:
        raise GridError(f"width must be positive, got {sigma}")
    if abs(q) + SUPPORT_WIDTHS * sigma > grid.extent:
        raise GridError(
            f"packet at q = {q:g} with width {sigma:g} is not supported inside [-{grid.extent:g}, {grid.extent:g}]"
        )
    return StateVector(grid.space, _sample(grid, q, p, sigma))


def wavefunction(state: StateVector, grid: PositionGrid) -> np.ndarray:
    """Sampled wave function values psi(x_k) (stored amplitudes divided by sqrt(dx))."""
    return state.amplitudes / np.sqrt(grid.spacing)


def overlap(z1: tuple[float, float], z2: tuple[float, float], grid: PositionGrid) -> complex:
    """Quadrature inner product ``<z1|z2>``."""
    return coherent_state(*z1, grid).inner(coherent_state(*z2, grid))


def overlap_modulus_sq(z1, z2) -> float:
    """Closed form ``|<z1|z2>|^2 = exp(-|z1 - z2|^2)`` with ``|z|^2 = (q^2 + p^2) / 2``."""
    dq, dp = z1[0] - z2[0], z1[1] - z2[1]
    return float(np.exp(-(dq ** 2 + dp ** 2) / 2))


@dataclass(frozen=True)
class CoherentFamily:
    position_grid: PositionGrid
    phase_grid: PhaseGrid
    matrix: np.ndarray = field(repr=False)  # columns are the stored |z> vectors

    @classmethod
    def build(cls, position_grid: PositionGrid | None = None, phase_grid: PhaseGrid | None = None) -> "CoherentFamily":
        position_grid = position_grid or PositionGrid()
        phase_grid = phase_grid or PhaseGrid()
        bad = grid_violations(position_grid, phase_grid)
        if bad:
            raise GridError("; ".join(bad))
        x = position_grid.x[:, None]
        q = phase_grid.points[:, 0][None, :]
        p = phase_grid.points[:, 1][None, :]
        z = np.exp(1j * p * x - (x - q) ** 2 / 2)
        z /= np.linalg.norm(z, axis=0)
        z.flags.writeable = False
        return cls(position_grid, phase_grid, z)

    @property
    def space(self) -> TensorSpace:
        return self.position_grid.space

    @property
    def weights(self) -> np.ndarray:
        return self.phase_grid.weights

    @property
    def states(self) -> list[StateVector]:
        return [StateVector(self.space, c) for c in self.matrix.T]

    def state_at(self, index: int) -> StateVector:
        return StateVector(self.space, self.matrix[:, index])

    def check_space(self, space: TensorSpace) -> None:
        if space != self.space:
            raise DimensionError(
                f"operand lives on {space.factor_ids} (dim {space.total_dim}), "
                f"family on a {self.position_grid.n_points}-point grid"
            )

    def amplitudes(self, v: StateVector) -> np.ndarray:
        """``<z|v>`` for every phase point."""
        self.check_space(v.space)
        return (v.amplitudes.conj() @ self.matrix).conj()

    def resolve(self, v: StateVector) -> StateVector:
        """``sum_z w |z><z|v>``."""
        return StateVector(self.space, self.matrix @ (self.weights * self.amplitudes(v)))

    def matrix_elements(self, rho: DensityOperator, zs, ws=None) -> np.ndarray:
        """``<z'|rho|z''>`` for coherent states at the given (q, p) points."""
        self.check_space(rho.space)
        left = np.column_stack([coherent_state(q, p, self.position_grid).amplitudes for q, p in zs])
        right = left if ws is None else np.column_stack(
            [coherent_state(q, p, self.position_grid).amplitudes for q, p in ws]
        )
        return left.conj().T @ rho.matrix @ right


def identity_resolution_residual(family: CoherentFamily, test_states) -> float:
    """Worst relative error of the discrete resolution of identity over ``test_states``."""
    worst = 0.0
    for v in test_states:
        r = family.resolve(v).amplitudes - v.amplitudes
        worst = max(worst, float(np.linalg.norm(r) / v.norm()))
    return worst


def husimi(rho: DensityOperator, family: CoherentFamily) -> np.ndarray:
    """Diagonal ``Re <z|rho|z>`` over the phase grid.

    Evaluated through the eigendecomposition of the Hermitian part of
    ``rho``, which is cheap for the low-rank operators used here.
    Eigenvalues below ``1e-15`` of the largest are dropped.
    """
    family.check_space(rho.space)
    lam, u = np.linalg.eigh((rho.matrix + rho.matrix.conj().T) / 2)
    big = np.abs(lam) > 1e-15 * np.abs(lam).max(initial=0.0)
    if not big.any():
        return np.zeros(family.matrix.shape[1])
    w = u[:, big].conj().T @ family.matrix
    return lam[big] @ (w.real ** 2 + w.imag ** 2)


class NegativeHusimiError(HilbertError):
    pass


def coarse_grain(rho: DensityOperator, family: CoherentFamily) -> DensityOperator:
    """``rho' = sum_z w |z><z|rho|z><z|``: a positive mixture of coherent projectors."""
    h = husimi(rho, family)
    if h.min() < HUSIMI_CLAMP:
        raise NegativeHusimiError(
            f"Husimi value {h.min():.3e} below {HUSIMI_CLAMP:g}; input is not positive"
        )
    c = family.weights * np.clip(h, 0.0, None)
    # terms below double-precision resolution of the largest one cannot change rho'
    keep = c > 1e-17 * c.max(initial=0.0)
    z = family.matrix[:, keep]
    a = z * np.sqrt(c[keep])
    return DensityOperator(rho.space, a @ a.conj().T)


def husimi_equivalence_error(rho: DensityOperator, family: CoherentFamily) -> float:
    """Largest change of the Husimi diagonal caused by coarse-graining."""
    before = husimi(rho, family)
    after = husimi(coarse_grain(rho, family), family)
    return float(np.max(np.abs(before - after)))


def write_wavefunction_csv(state: StateVector, grid: PositionGrid, path) -> None:
    """Columns: ``x, re_psi, im_psi``."""
    psi = wavefunction(state, grid)
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "re_psi", "im_psi"])
        for x, v in zip(grid.x, psi):
            w.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag))])


def write_family_csv(family: CoherentFamily, path, indices=None) -> None:
    """Long format, columns: ``q, p, x, re_psi, im_psi``."""
    grid = family.position_grid
    indices = range(family.matrix.shape[1]) if indices is None else indices
    scale = 1 / np.sqrt(grid.spacing)
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["q", "p", "x", "re_psi", "im_psi"])
        for i in indices:
            q, p = family.phase_grid.points[i]
            for x, v in zip(grid.x, family.matrix[:, i] * scale):
                w.writerow([repr(float(q)), repr(float(p)), repr(float(x)), repr(float(v.real)), repr(float(v.imag))])
