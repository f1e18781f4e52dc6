"""Dense linear algebra over labeled tensor-product spaces.

States, density operators and projectors all carry the :class:`TensorSpace`
they live on. Factor order is the declaration order of the space and the
flat index is row-major over factors, so ``kron`` of factor vectors in that
order gives the flat amplitude vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

TOL_NORM = 1e-9
TOL_HERM = 1e-9
TOL_IDEM = 1e-9
TOL_PSD = 1e-8
TOL_ZERO = 1e-12


class HilbertError(ValueError):
    """Base class for invalid inputs to the linear-algebra layer."""


class DimensionError(HilbertError):
    pass


class NormalizationError(HilbertError):
    pass


class ZeroProbabilityError(HilbertError):
    """Raised when a collapse is requested onto an event of (numerically) zero probability."""

    def __init__(self, probability: float):
        super().__init__(f"event has probability {probability:.3e}; collapse undefined")
        self.probability = probability


class NonOrthogonalError(HilbertError):
    def __init__(self, i: int, j: int, overlap: float):
        super().__init__(
            f"projectors {i} and {j} are not orthogonal: ||P_i P_j|| = {overlap:.3e}"
        )
        self.pair = (i, j)
        self.overlap = overlap


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class BasisLabel:
    factor_id: str
    state_tag: str


@dataclass(frozen=True)
class Factor:
    factor_id: str
    tags: tuple[str, ...]

    @property
    def dim(self) -> int:
        return len(self.tags)


@dataclass(frozen=True)
class TensorSpace:
    factors: tuple[Factor, ...]

    def __post_init__(self):
        ids = [f.factor_id for f in self.factors]
        if len(set(ids)) != len(ids):
            raise HilbertError(f"duplicate factor ids in {ids}")
        for f in self.factors:
            if f.dim < 1:
                raise HilbertError(f"factor {f.factor_id!r} has dimension 0")
            if len(set(f.tags)) != f.dim:
                raise HilbertError(f"factor {f.factor_id!r} has repeated state tags")

    @classmethod
    def of(cls, *specs) -> "TensorSpace":
        """Build from ``(factor_id, dim)`` or ``(factor_id, tags)`` pairs.

        Integer dimensions get tags ``"1".."dim"``.
        """
        factors = []
        for fid, d in specs:
            if isinstance(d, (int, np.integer)):
                tags = tuple(str(k + 1) for k in range(int(d)))
            else:
                tags = tuple(str(t) for t in d)
            factors.append(Factor(str(fid), tags))
        return cls(tuple(factors))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    @property
    def factor_ids(self) -> tuple[str, ...]:
        return tuple(f.factor_id for f in self.factors)

    def position(self, factor_id: str) -> int:
        try:
            return self.factor_ids.index(str(factor_id))
        except ValueError:
            raise HilbertError(f"unknown factor {factor_id!r}; have {self.factor_ids}") from None

    def factor(self, factor_id: str) -> Factor:
        return self.factors[self.position(factor_id)]

    def tag_index(self, factor_id: str, tag: str) -> int:
        f = self.factor(factor_id)
        try:
            return f.tags.index(str(tag))
        except ValueError:
            raise HilbertError(f"factor {factor_id!r} has no tag {tag!r}") from None

    def labels(self, index: int) -> tuple[BasisLabel, ...]:
        """Basis labels of the flat index ``index``."""
        multi = np.unravel_index(index, self.dims)
        return tuple(BasisLabel(f.factor_id, f.tags[k]) for f, k in zip(self.factors, multi))

    def index(self, tags: dict[str, str]) -> int:
        """Flat index of the product basis state given one tag per factor."""
        if set(tags) != set(self.factor_ids):
            raise HilbertError("need exactly one tag per factor")
        multi = [self.tag_index(f.factor_id, tags[f.factor_id]) for f in self.factors]
        return int(np.ravel_multi_index(multi, self.dims))

    def identity(self) -> np.ndarray:
        return np.eye(self.total_dim, dtype=np.complex128)


@dataclass(frozen=True)
class StateVector:
    space: TensorSpace
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = _frozen(self.amplitudes).reshape(-1)
        if amps.shape[0] != self.space.total_dim:
            raise DimensionError(
                f"{amps.shape[0]} amplitudes for a space of dimension {self.space.total_dim}"
            )
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = TOL_NORM) -> bool:
        return abs(self.norm() ** 2 - 1.0) <= tol

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0:
            raise NormalizationError("cannot normalize the zero vector")
        return StateVector(self.space, self.amplitudes / n)

    def inner(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        _same_space(self.space, other.space)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __add__(self, other: "StateVector") -> "StateVector":
        _same_space(self.space, other.space)
        return StateVector(self.space, self.amplitudes + other.amplitudes)

    def __mul__(self, c: complex) -> "StateVector":
        return StateVector(self.space, self.amplitudes * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class DensityOperator:
    space: TensorSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        n = self.space.total_dim
        if m.shape != (n, n):
            raise DimensionError(f"matrix shape {m.shape} does not match dimension {n}")
        object.__setattr__(self, "matrix", m)

    def check(self, tol_herm: float = TOL_HERM, tol_psd: float = TOL_PSD) -> list[str]:
        """Return the violated density-operator invariants (empty if valid)."""
        problems = []
        herm = np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0)
        if herm > tol_herm:
            problems.append(f"not Hermitian (max deviation {herm:.2e})")
        else:
            lo = np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2).min()
            if lo < -tol_psd:
                problems.append(f"not positive semidefinite (min eigenvalue {lo:.2e})")
        return problems


@dataclass(frozen=True)
class Projector:
    space: TensorSpace
    matrix: np.ndarray = field(repr=False)
    tol: float = TOL_IDEM

    def __post_init__(self):
        m = _frozen(self.matrix)
        n = self.space.total_dim
        if m.shape != (n, n):
            raise DimensionError(f"matrix shape {m.shape} does not match dimension {n}")
        herm = np.max(np.abs(m - m.conj().T), initial=0.0)
        idem = np.max(np.abs(m @ m - m), initial=0.0)
        if herm > self.tol or idem > self.tol:
            raise HilbertError(
                f"not a projector: |P - P^+| = {herm:.2e}, |P^2 - P| = {idem:.2e}"
            )
        object.__setattr__(self, "matrix", m)

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))

    def apply(self, v: StateVector) -> StateVector:
        _same_space(self.space, v.space)
        return StateVector(self.space, self.matrix @ v.amplitudes)


def _same_space(a: TensorSpace, b: TensorSpace) -> None:
    if a != b:
        raise DimensionError(f"space mismatch: {a.factor_ids} vs {b.factor_ids}")


def basis_state(space: TensorSpace, tags: dict[str, str] | None = None, **kw) -> StateVector:
    """Product basis state; tags may be given as a dict or keywords."""
    tags = dict(tags or {}, **kw)
    amps = np.zeros(space.total_dim, dtype=np.complex128)
    amps[space.index(tags)] = 1.0
    return StateVector(space, amps)


def density(v: StateVector) -> DensityOperator:
    return DensityOperator(v.space, np.outer(v.amplitudes, v.amplitudes.conj()))


def tensor_product(states: Sequence[StateVector]) -> StateVector:
    """Kronecker product in the given order; factor ids must be disjoint."""
    if not states:
        raise HilbertError("tensor_product of an empty list")
    factors = tuple(f for s in states for f in s.space.factors)
    space = TensorSpace(factors)
    amps = reduce(np.kron, (s.amplitudes for s in states))
    return StateVector(space, amps)


def outer_projector(v: StateVector, tol: float = TOL_NORM) -> Projector:
    if not v.is_normalized(tol):
        raise NormalizationError(f"|v|^2 = {v.norm() ** 2:.12g}, expected 1")
    return Projector(v.space, np.outer(v.amplitudes, v.amplitudes.conj()))


def lift_to_space(p: Projector, target: TensorSpace, factor_id: str) -> Projector:
    """Embed ``p`` acting on one factor as ``p`` tensor identities on ``target``."""
    k = target.position(factor_id)
    d = target.dims[k]
    if p.matrix.shape != (d, d):
        raise DimensionError(
            f"projector of size {p.matrix.shape[0]} cannot act on factor {factor_id!r} of dim {d}"
        )
    before = int(np.prod(target.dims[:k], dtype=np.int64))
    after = int(np.prod(target.dims[k + 1:], dtype=np.int64))
    m = np.kron(np.kron(np.eye(before), p.matrix), np.eye(after))
    return Projector(target, m, tol=p.tol)


def factor_projector(space: TensorSpace, factor_id: str, tags: Iterable[str]) -> Projector:
    """Projector onto the span of the given basis tags of one factor, lifted to ``space``."""
    f = space.factor(factor_id)
    local = np.zeros((f.dim, f.dim), dtype=np.complex128)
    for t in tags:
        i = space.tag_index(factor_id, t)
        local[i, i] = 1.0
    single = TensorSpace((f,))
    return lift_to_space(Projector(single, local), space, factor_id)


def apply_on_factor(v: StateVector, op: np.ndarray, factor_id: str) -> StateVector:
    """Apply a local operator to one factor without forming the full matrix."""
    k = v.space.position(factor_id)
    dims = v.space.dims
    op = np.asarray(op)
    if op.shape != (dims[k], dims[k]):
        raise DimensionError(f"operator shape {op.shape} for factor of dim {dims[k]}")
    t = v.amplitudes.reshape(dims)
    t = np.moveaxis(np.tensordot(op, t, axes=([1], [k])), 0, k)
    return StateVector(v.space, t.reshape(-1))


def trace(x) -> complex:
    m = x.matrix if hasattr(x, "matrix") else np.asarray(x)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"trace of non-square array with shape {m.shape}")
    return complex(np.trace(m))


def event_probability(p: Projector, rho: DensityOperator, tol: float = TOL_HERM) -> float:
    """Trace rule ``Tr(P rho)``; raises if the result is not real to ``tol``."""
    _same_space(p.space, rho.space)
    # Tr(P rho) = sum_ij P_ij rho_ji
    val = complex(np.sum(p.matrix * rho.matrix.T))
    if abs(val.imag) > tol:
        raise HilbertError(f"Tr(P rho) has imaginary part {val.imag:.2e}")
    return val.real


def collapse(
    v: StateVector, p: Projector, tol_zero: float = TOL_ZERO
) -> tuple[StateVector, float]:
    """Project ``v`` with ``p`` and renormalize. Returns (new state, event probability)."""
    projected = p.apply(v)
    prob = projected.norm() ** 2
    if prob <= tol_zero:
        raise ZeroProbabilityError(prob)
    return projected.normalized(), prob


def sum_projectors(ps: Sequence[Projector], tol: float = TOL_IDEM) -> Projector:
    """Sum of pairwise-orthogonal projectors.

    Raises :class:`NonOrthogonalError` naming the first offending pair.
    """
    if not ps:
        raise HilbertError("sum_projectors of an empty list")
    space = ps[0].space
    for q in ps[1:]:
        _same_space(space, q.space)
    for i in range(len(ps)):
        for j in range(i + 1, len(ps)):
            ov = float(np.max(np.abs(ps[i].matrix @ ps[j].matrix)))
            if ov > tol:
                raise NonOrthogonalError(i, j, ov)
    return Projector(space, sum(q.matrix for q in ps), tol=tol)


def partial_trace(rho: DensityOperator, keep: Sequence[str]) -> DensityOperator:
    """Reduced density operator on the factors in ``keep`` (kept in space order)."""
    space = rho.space
    keep_pos = sorted(space.position(f) for f in keep)
    drop_pos = [k for k in range(len(space.dims)) if k not in keep_pos]
    dims = space.dims
    n = len(dims)
    t = rho.matrix.reshape(dims + dims)
    for k in sorted(drop_pos, reverse=True):
        t = np.trace(t, axis1=k, axis2=k + n)
        n -= 1
    kept = tuple(space.factors[k] for k in keep_pos)
    sub = TensorSpace(kept)
    return DensityOperator(sub, t.reshape(sub.total_dim, sub.total_dim))
