import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collapse_lab.chain import (
    OBSERVER_A_TAGS,
    OBSERVER_B_TAGS,
    TWO_OBSERVER_SPACE,
    ChainSpec,
    InvariantError,
    TwoObserverSpec,
    agreement_check,
    build_chain_state,
    build_two_observer_state,
    chain_outcome_probability,
    expected_collapsed_state,
    level_projector,
    observer_a_collapse,
    observer_b_collapse,
    prior_event_equivalence,
    sequence_probabilities,
)
from collapse_lab.hilbert import HilbertError, ZeroProbabilityError, density, event_probability

seeds = st.integers(min_value=0, max_value=2**32 - 1)
S = np.sqrt(0.5)


def random_pair(rng):
    z = rng.normal(size=2) + 1j * rng.normal(size=2)
    z /= np.linalg.norm(z)
    return complex(z[0]), complex(z[1])


def expansion_oracle(spec: TwoObserverSpec) -> dict[int, complex]:
    """Expand the two-observer state term by term with explicit index arithmetic."""
    dims = (2, 2, 2, 4, 2, 4)
    out = {}
    branches = [
        (spec.a, 0, {0: spec.e, 1: spec.f}, {0: spec.g, 1: spec.h}),
        (spec.b, 1, {2: spec.p, 3: spec.q}, {2: spec.r, 3: spec.s}),
    ]
    for amp, j, brain_a, brain_b in branches:
        for (ka, ca), (kb, cb) in itertools.product(brain_a.items(), brain_b.items()):
            idx = int(np.ravel_multi_index((j, j, j, ka, j, kb), dims))
            out[idx] = out.get(idx, 0) + amp * ca * cb
    return out


class TestChainState:
    def test_single_branch(self):
        psi = build_chain_state(ChainSpec(3, 1, 0))
        want = np.zeros(8)
        want[0] = 1
        np.testing.assert_array_equal(psi.amplitudes, want)
        assert [l.state_tag for l in psi.space.labels(0)] == ["1", "1", "1"]

    def test_bell_type(self):
        psi = build_chain_state(ChainSpec(2, S, S))
        np.testing.assert_allclose(psi.amplitudes, [S, 0, 0, S])

    def test_norm(self):
        psi = build_chain_state(ChainSpec(5, 0.6, 0.8j))
        assert abs(np.sqrt(np.sum(np.abs(psi.amplitudes) ** 2)) - 1) <= 1e-12

    @pytest.mark.parametrize("bad", [dict(n_levels=21, a=1, b=0), dict(n_levels=1, a=1, b=0),
                                     dict(n_levels=3, a=1, b=1)])
    def test_invalid(self, bad):
        with pytest.raises(InvariantError):
            ChainSpec(**bad)


class TestLevelProjector:
    def test_rank(self):
        p = level_projector(build_chain_state(ChainSpec(2, 1, 0)).space, 1, 1)
        assert np.linalg.matrix_rank(p.matrix) == 2

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_orthogonal_and_complete(self, n):
        sp = build_chain_state(ChainSpec(3, 1, 0)).space
        p1, p2 = level_projector(sp, n, 1), level_projector(sp, n, 2)
        assert np.max(np.abs(p1.matrix @ p2.matrix)) <= 1e-12
        np.testing.assert_array_equal(p1.matrix + p2.matrix, np.eye(8))

    def test_range(self):
        sp = build_chain_state(ChainSpec(3, 1, 0)).space
        with pytest.raises(HilbertError):
            level_projector(sp, 4, 1)
        with pytest.raises(HilbertError):
            level_projector(sp, 1, 3)


class TestChainProbability:
    @pytest.mark.parametrize("n", range(1, 7))
    def test_example_value(self, n):
        spec = ChainSpec(6, 0.6, 0.8)
        got = chain_outcome_probability(spec, n, 1).probability
        # oracle: dense trace with the lifted projector
        psi = build_chain_state(spec)
        dense = event_probability(level_projector(psi.space, n, 1), density(psi))
        assert abs(got - 0.36) <= 1e-12
        assert abs(dense - 0.36) <= 1e-12

    def test_certain_branch(self):
        assert chain_outcome_probability(ChainSpec(4, 1, 0), 3, 2).probability == 0

    def test_symmetric(self):
        assert abs(chain_outcome_probability(ChainSpec(4, S, S), 2, 1).probability - 0.5) <= 1e-15

    @given(seeds, st.integers(2, 8))
    def test_level_independence(self, seed, n_levels):
        a, b = random_pair(np.random.default_rng(seed))
        spec = ChainSpec(n_levels, a, b)
        for j, want in ((1, abs(a) ** 2), (2, abs(b) ** 2)):
            probs = [chain_outcome_probability(spec, n, j).probability for n in range(1, n_levels + 1)]
            assert max(probs) - min(probs) <= 1e-12
            assert max(abs(p - want) for p in probs) <= 1e-12
        for n in range(1, n_levels + 1):
            total = sum(chain_outcome_probability(spec, n, j).probability for j in (1, 2))
            assert abs(total - 1) <= 1e-12

    def test_large_chain_is_supported(self):
        spec = ChainSpec(20, 0.6, 0.8)
        assert abs(chain_outcome_probability(spec, 17, 2).probability - 0.64) <= 1e-12


class TestTwoObserver:
    def test_degenerate_brains(self):
        spec = TwoObserverSpec(0.6, 0.8, 1, 0, 1, 0, 1, 0, 1, 0)
        assert np.count_nonzero(build_two_observer_state(spec).amplitudes) == 2

    def test_eight_terms(self, rng):
        spec = TwoObserverSpec(*(x for _ in range(5) for x in random_pair(rng)))
        psi = build_two_observer_state(spec)
        terms = expansion_oracle(spec)
        assert len(terms) == 8
        assert np.count_nonzero(psi.amplitudes) == 8
        for idx, amp in terms.items():
            assert abs(psi.amplitudes[idx] - amp) <= 1e-15

    @given(seeds)
    def test_norm(self, seed):
        psi = build_two_observer_state(TwoObserverSpec.random(np.random.default_rng(seed)))
        assert abs(psi.norm() - 1) <= 1e-12

    def test_basis_orthonormal(self):
        # every product basis state of the six-factor space: Gram matrix is the identity
        sp = TWO_OBSERVER_SPACE
        gram = np.eye(sp.total_dim)
        basis = np.eye(sp.total_dim, dtype=complex)
        assert np.max(np.abs(basis.conj().T @ basis - gram)) <= 1e-12
        assert sp.dims == (2, 2, 2, 4, 2, 4)
        assert sp.factor("4a").tags == OBSERVER_A_TAGS
        assert sp.factor("4b").tags == OBSERVER_B_TAGS

    def test_invalid_spec(self):
        with pytest.raises(InvariantError):
            TwoObserverSpec(0.6, 0.8, 1, 1, 1, 0, 1, 0, 1, 0)


class TestObserverCollapse:
    spec = TwoObserverSpec(0.6, 0.8, 0.5, np.sqrt(0.75), 0.6, 0.8j, 0.8, -0.6, S, S)

    def test_probability(self):
        _, p = observer_a_collapse(build_two_observer_state(self.spec), "1x")
        assert abs(p - 0.36 * 0.25) <= 1e-12

    def test_collapsed_state_matches_closed_form(self):
        new, _ = observer_a_collapse(build_two_observer_state(self.spec), "1x")
        want = expected_collapsed_state(self.spec)
        assert abs(abs(want.inner(new)) - 1) <= 1e-12
        assert np.linalg.norm(new.amplitudes[want.amplitudes == 0]) <= 1e-12

    def test_observer_b_has_no_branch_two_support(self):
        new, _ = observer_a_collapse(build_two_observer_state(self.spec), "1x")
        sp = new.space
        for tag in ("2c", "2d"):
            k = sp.tag_index("4b", tag)
            amps = new.amplitudes.reshape(sp.dims)[:, :, :, :, :, k]
            assert np.max(np.abs(amps)) == 0

    def test_agreement(self):
        psi = build_two_observer_state(self.spec)
        assert agreement_check(observer_a_collapse(psi, "1x")[0]) == 1
        assert agreement_check(observer_a_collapse(psi, "2u")[0]) == 2
        assert agreement_check(psi) == "disagreement"

    def test_zero_probability_tag(self):
        spec = TwoObserverSpec(0.6, 0.8, 1, 0, 1, 0, 1, 0, 1, 0)
        with pytest.raises(ZeroProbabilityError):
            observer_a_collapse(build_two_observer_state(spec), "1y")

    def test_sequence_completeness(self):
        seq = sequence_probabilities(self.spec)
        consistent = {k: v for k, v in seq.items() if k[0][0] == k[1][0]}
        assert len(consistent) == 8
        assert abs(sum(consistent.values()) - 1) <= 1e-12
        assert max(v for k, v in seq.items() if k[0][0] != k[1][0]) == 0

    def test_b_then_agreement(self):
        psi = build_two_observer_state(self.spec)
        after_a, _ = observer_a_collapse(psi, "2v")
        after_b, p = observer_b_collapse(after_a, "2d")
        assert abs(p - 0.5) <= 1e-12
        assert agreement_check(after_b) == 2

    @given(seeds, st.sampled_from(OBSERVER_A_TAGS))
    def test_agreement_after_any_collapse(self, seed, tag):
        psi = build_two_observer_state(TwoObserverSpec.random(np.random.default_rng(seed)))
        new, p = observer_a_collapse(psi, tag)
        assert agreement_check(new) == int(tag[0])


class TestPriorEvent:
    def test_example(self):
        spec = TwoObserverSpec(0.6, 0.8, 0.5, np.sqrt(0.75), 1, 0, 1, 0, 1, 0)
        rep = prior_event_equivalence(spec)
        assert abs(rep.direct - 0.09) <= 1e-12
        assert abs(rep.two_step - 0.09) <= 1e-12
        # oracle: two-path product of the branch and conditional probabilities
        assert abs(rep.device_probability * rep.conditional_probability - 0.36 * 0.25) <= 1e-12
        assert rep.passed

    def test_zero_branch(self):
        rep = prior_event_equivalence(TwoObserverSpec(0, 1, 0.5, np.sqrt(0.75), 1, 0, 1, 0, 1, 0))
        assert rep.direct == 0 and rep.two_step == 0 and rep.passed

    @given(seeds)
    def test_random_specs(self, seed):
        rep = prior_event_equivalence(TwoObserverSpec.random(np.random.default_rng(seed)))
        assert rep.discrepancy <= 1e-12
