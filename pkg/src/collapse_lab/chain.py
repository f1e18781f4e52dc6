"""Von Neumann measurement chains and the two-observer model.

The chain state is built directly in its final entangled form
``a |1,1>|2,1>...|N,1> + b |1,2>|2,2>...|N,2>``; the interaction dynamics
that would produce it are not simulated.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .hilbert import (
    TOL_NORM,
    HilbertError,
    Projector,
    StateVector,
    TensorSpace,
    apply_on_factor,
    basis_state,
    collapse,
    factor_projector,
    lift_to_space,
    outer_projector,
    tensor_product,
)

MAX_LEVELS = 20

OUTCOME_TAGS = ("1", "2")
OBSERVER_A_TAGS = ("1x", "1y", "2u", "2v")
OBSERVER_B_TAGS = ("1z", "1w", "2c", "2d")

# atom, device, early processing (a), brain (a), early processing (b), brain (b)
TWO_OBSERVER_SPACE = TensorSpace.of(
    ("1", OUTCOME_TAGS),
    ("2", OUTCOME_TAGS),
    ("3a", OUTCOME_TAGS),
    ("4a", OBSERVER_A_TAGS),
    ("3b", OUTCOME_TAGS),
    ("4b", OBSERVER_B_TAGS),
)


class InvariantError(HilbertError):
    pass


def _check_unit(name: str, *amps: complex, tol: float = TOL_NORM) -> None:
    s = sum(abs(x) ** 2 for x in amps)
    if abs(s - 1.0) > tol:
        raise InvariantError(f"{name}: squared moduli sum to {s:.12g}, expected 1")


@dataclass(frozen=True)
class ChainSpec:
    n_levels: int
    a: complex
    b: complex

    def __post_init__(self):
        if self.n_levels < 2:
            raise InvariantError(f"need at least 2 levels, got {self.n_levels}")
        if self.n_levels > MAX_LEVELS:
            raise InvariantError(
                f"{self.n_levels} levels exceeds the dense limit of {MAX_LEVELS}"
            )
        _check_unit("|a|^2 + |b|^2", self.a, self.b)


@dataclass(frozen=True)
class TwoObserverSpec:
    a: complex
    b: complex
    e: complex
    f: complex
    g: complex
    h: complex
    p: complex
    q: complex
    r: complex
    s: complex

    def __post_init__(self):
        _check_unit("|a|^2 + |b|^2", self.a, self.b)
        _check_unit("|e|^2 + |f|^2", self.e, self.f)
        _check_unit("|g|^2 + |h|^2", self.g, self.h)
        _check_unit("|p|^2 + |q|^2", self.p, self.q)
        _check_unit("|r|^2 + |s|^2", self.r, self.s)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "TwoObserverSpec":
        def pair():
            z = rng.normal(size=2) + 1j * rng.normal(size=2)
            z /= np.linalg.norm(z)
            return complex(z[0]), complex(z[1])

        (a, b), (e, f), (g, h), (p, q), (r, s) = (pair() for _ in range(5))
        return cls(a, b, e, f, g, h, p, q, r, s)


@dataclass(frozen=True)
class BranchOutcome:
    level: str
    outcome: str
    probability: float


def chain_space(n_levels: int) -> TensorSpace:
    return TensorSpace.of(*[(str(n), OUTCOME_TAGS) for n in range(1, n_levels + 1)])


def build_chain_state(spec: ChainSpec) -> StateVector:
    space = chain_space(spec.n_levels)
    amps = np.zeros(space.total_dim, dtype=np.complex128)
    amps[0] = spec.a  # |1,1>|2,1>...|N,1>
    amps[-1] = spec.b  # |1,2>|2,2>...|N,2>
    return StateVector(space, amps)


def _check_level(space: TensorSpace, n: int, j) -> tuple[str, str]:
    if not 1 <= int(n) <= len(space.factors):
        raise HilbertError(f"level {n} outside 1..{len(space.factors)}")
    if str(j) not in OUTCOME_TAGS:
        raise HilbertError(f"outcome {j!r} not in {OUTCOME_TAGS}")
    return str(int(n)), str(j)


def level_projector(space: TensorSpace, n: int, j) -> Projector:
    fid, tag = _check_level(space, n, j)
    single = TensorSpace((space.factor(fid),))
    return lift_to_space(outer_projector(basis_state(single, {fid: tag})), space, fid)


def chain_outcome_probability(spec: ChainSpec, n: int, j) -> BranchOutcome:
    """Probability that level ``n`` registers outcome ``j``.

    Evaluated as ``<Psi|P_nj|Psi>`` by acting on the level's factor alone, so
    the full ``2^N x 2^N`` projector is never formed.
    """
    psi = build_chain_state(spec)
    fid, tag = _check_level(psi.space, n, j)
    local = np.zeros((2, 2), dtype=np.complex128)
    k = OUTCOME_TAGS.index(tag)
    local[k, k] = 1.0
    prob = apply_on_factor(psi, local, fid).norm() ** 2
    return BranchOutcome(fid, tag, float(prob))


def _branch(j: str, amp_4a: tuple[complex, complex], amp_4b: tuple[complex, complex]) -> StateVector:
    def single(fid, tags, coeffs):
        sp = TensorSpace.of((fid, tags))
        amps = np.zeros(len(tags), dtype=np.complex128)
        for t, c in coeffs.items():
            amps[tags.index(t)] = c
        return StateVector(sp, amps)

    a_tags = [t for t in OBSERVER_A_TAGS if t[0] == j]
    b_tags = [t for t in OBSERVER_B_TAGS if t[0] == j]
    return tensor_product([
        single("1", OUTCOME_TAGS, {j: 1}),
        single("2", OUTCOME_TAGS, {j: 1}),
        single("3a", OUTCOME_TAGS, {j: 1}),
        single("4a", OBSERVER_A_TAGS, dict(zip(a_tags, amp_4a))),
        single("3b", OUTCOME_TAGS, {j: 1}),
        single("4b", OBSERVER_B_TAGS, dict(zip(b_tags, amp_4b))),
    ])


def build_two_observer_state(spec: TwoObserverSpec) -> StateVector:
    one = _branch("1", (spec.e, spec.f), (spec.g, spec.h))
    two = _branch("2", (spec.p, spec.q), (spec.r, spec.s))
    return spec.a * one + spec.b * two


@lru_cache(maxsize=None)
def _two_observer_projector(factor_id: str, tags: tuple[str, ...]) -> Projector:
    return factor_projector(TWO_OBSERVER_SPACE, factor_id, tags)


def brain_projector(observer: str, tag: str) -> Projector:
    fid = {"a": "4a", "b": "4b"}[observer]
    return _two_observer_projector(fid, (tag,))


def observer_a_collapse(state: StateVector, tag: str) -> tuple[StateVector, float]:
    return collapse(state, brain_projector("a", tag))


def observer_b_collapse(state: StateVector, tag: str) -> tuple[StateVector, float]:
    return collapse(state, brain_projector("b", tag))


def agreement_check(collapsed: StateVector, tol: float = 1e-10) -> Literal[1, 2, "disagreement"]:
    """Outcome index both observers' brain states agree on, or ``"disagreement"``."""
    for j in (1, 2):
        pa = _two_observer_projector("4a", tuple(t for t in OBSERVER_A_TAGS if t[0] == str(j)))
        pb = _two_observer_projector("4b", tuple(t for t in OBSERVER_B_TAGS if t[0] == str(j)))
        inside = pb.apply(pa.apply(collapsed))
        outside = np.linalg.norm(collapsed.amplitudes - inside.amplitudes)
        if outside <= tol:
            return j
    return "disagreement"


def expected_collapsed_state(spec: TwoObserverSpec) -> StateVector:
    """Closed form of the state left after observer a registers ``1x``."""
    return _branch("1", (1.0, 0.0), (spec.g, spec.h))


def sequence_probabilities(spec: TwoObserverSpec) -> dict[tuple[str, str], float]:
    """Probabilities of every (observer a tag, observer b tag) pair when a looks first.

    Pairs with a vanishing first event are reported with probability 0.
    """
    psi = build_two_observer_state(spec)
    out = {}
    for ta in OBSERVER_A_TAGS:
        try:
            after_a, pa = observer_a_collapse(psi, ta)
        except HilbertError:
            for tb in OBSERVER_B_TAGS:
                out[(ta, tb)] = 0.0
            continue
        for tb in OBSERVER_B_TAGS:
            pb = float(np.linalg.norm(brain_projector("b", tb).apply(after_a).amplitudes) ** 2)
            out[(ta, tb)] = pa * pb
    return out


@dataclass(frozen=True)
class PriorEventReport:
    direct: float
    device_probability: float
    conditional_probability: float
    two_step: float
    expected: float
    discrepancy: float
    passed: bool


def prior_event_equivalence(spec: TwoObserverSpec, tol: float = 1e-12) -> PriorEventReport:
    """Probability of the ``1x`` experience with and without a prior device-level event."""
    psi = build_two_observer_state(spec)
    expected = abs(spec.a) ** 2 * abs(spec.e) ** 2

    p_1x = brain_projector("a", "1x")
    direct = float(np.linalg.norm(p_1x.apply(psi).amplitudes) ** 2)

    p_dev = _two_observer_projector("2", ("1",))
    dev_state = p_dev.apply(psi)
    p_device = dev_state.norm() ** 2
    if p_device > 0:
        p_cond = float(np.linalg.norm(p_1x.apply(dev_state.normalized()).amplitudes) ** 2)
    else:
        p_cond = 0.0
    two_step = p_device * p_cond

    discrepancy = max(abs(direct - two_step), abs(direct - expected), abs(two_step - expected))
    return PriorEventReport(
        direct=direct,
        device_probability=float(p_device),
        conditional_probability=p_cond,
        two_step=float(two_step),
        expected=expected,
        discrepancy=discrepancy,
        passed=discrepancy <= tol,
    )
