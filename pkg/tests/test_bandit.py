"""Posterior bookkeeping, rareness correction, and action selection."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seedsched import (
    DimensionMismatch,
    EmptyCorpusError,
    PosteriorState,
    SeededRng,
    SnapshotError,
    Variant,
    compute_pbar,
    compute_reward,
    expected_phi,
    init_posterior,
    load_posterior,
    sample_psi,
    save_posterior,
    select_action,
    update_posterior,
)


class FakeRng:
    """Returns scripted arrays from beta(); records what it was asked for."""

    def __init__(self, values):
        self._values = [np.asarray(v, dtype=float) for v in values]
        self.calls = []

    def beta(self, a, b):
        self.calls.append((np.asarray(a, dtype=float), np.asarray(b, dtype=float)))
        return self._values.pop(0)


def test_init_posterior_is_uniform():
    state = init_posterior(5)
    assert state.k_size == 5
    assert (state.alpha == 1.0).all()
    assert (state.beta == 1.0).all()


@pytest.mark.parametrize("k", [0, -3])
def test_init_posterior_rejects_bad_size(k):
    with pytest.raises(ValueError):
        init_posterior(k)


def test_posterior_state_validation():
    with pytest.raises(DimensionMismatch):
        PosteriorState(np.ones(3), np.ones(4))
    with pytest.raises(DimensionMismatch):
        PosteriorState(np.ones((2, 2)), np.ones((2, 2)))
    with pytest.raises(ValueError):
        PosteriorState(np.array([1.0, 0.5]), np.ones(2))


def test_compute_reward_marks_hit_features_only():
    cov = np.array([2, 0, 1, 0])
    assert compute_reward(cov, True) == {0: 1, 2: 1}
    assert compute_reward(cov, False) == {0: 0, 2: 0}
    assert compute_reward(np.zeros(4), True) == {}


def test_compute_reward_rejects_matrix():
    with pytest.raises(DimensionMismatch):
        compute_reward(np.zeros((2, 2)), True)


def test_update_posterior_conjugate_steps():
    state = init_posterior(3)
    out = update_posterior(state, {0: 1, 2: 0})
    assert out is state
    assert state.alpha.tolist() == [2.0, 1.0, 1.0]
    assert state.beta.tolist() == [1.0, 1.0, 2.0]


def test_update_posterior_rejects_bad_input():
    state = init_posterior(2)
    with pytest.raises(DimensionMismatch):
        update_posterior(state, {5: 1})
    with pytest.raises(ValueError):
        update_posterior(state, {0: 2})


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_counting_invariant(data):
    # alpha_k - 1 equals interesting hits of k, beta_k - 1 the rest, exactly
    k = data.draw(st.integers(min_value=1, max_value=16))
    state = init_posterior(k)
    hits = np.zeros(k, dtype=int)
    wins = np.zeros(k, dtype=int)
    n = data.draw(st.integers(min_value=0, max_value=30))
    for _ in range(n):
        cov = np.array(data.draw(st.lists(st.integers(0, 3), min_size=k, max_size=k)))
        interesting = data.draw(st.booleans())
        update_posterior(state, compute_reward(cov, interesting))
        touched = cov > 0
        hits += touched
        wins += touched & interesting
    assert (state.alpha - 1 == wins).all()
    assert (state.beta - 1 == hits - wins).all()


class TestPhi:
    def test_uniform_posterior_value(self):
        # (1+1) / (1+1+1)
        assert expected_phi(init_posterior(1))[0] == pytest.approx(2.0 / 3.0)

    def test_matches_psi_distribution_mean(self):
        # psi ~ Beta(alpha+beta, alpha^2); for (3, 2) that is Beta(5, 9)
        state = PosteriorState(np.array([3.0]), np.array([2.0]))
        one = sample_psi(state, SeededRng(17))
        assert one.shape == (1,)
        assert 0.0 < one[0] < 1.0
        assert expected_phi(state)[0] == pytest.approx(5.0 / 14.0)
        draws = SeededRng(17).beta(5.0, 9.0, size=100_000)
        assert abs(draws.mean() - 5.0 / 14.0) < 0.002

    def test_decreasing_in_alpha_increasing_in_beta(self):
        alphas = np.arange(1.0, 200.0)
        fixed_b = PosteriorState(alphas, np.full(alphas.size, 7.0))
        vals = expected_phi(fixed_b)
        assert (np.diff(vals) < 0).all()
        betas = np.arange(1.0, 200.0)
        fixed_a = PosteriorState(np.full(betas.size, 7.0), betas)
        assert (np.diff(expected_phi(fixed_a)) > 0).all()

    def test_asymptotic_reciprocal_alpha(self):
        state = PosteriorState(np.array([1e6]), np.array([1.0]))
        assert abs(expected_phi(state)[0] * 1e6 - 1.0) <= 2e-6

    def test_asymptotic_toward_one(self):
        state = PosteriorState(np.array([1.0]), np.array([1e6]))
        assert expected_phi(state)[0] >= 1.0 - 3e-6


def test_pbar_normalizes_posterior_means():
    state = PosteriorState(np.array([2.0, 1.0]), np.array([1.0, 1.0]))
    assert compute_pbar(state).tolist() == pytest.approx([4.0 / 7.0, 3.0 / 7.0])
    assert compute_pbar(init_posterior(4)).tolist() == pytest.approx([0.25] * 4)


class TestSelectAction:
    def test_tie_goes_to_smallest_index(self):
        rng = FakeRng([[0.5, 0.5, 0.5]])
        assert select_action(init_posterior(3), "rare-minus", np.ones(3, bool), rng) == 0

    def test_mask_excludes_features(self):
        rng = FakeRng([[0.9, 0.5, 0.5]])
        mask = np.array([False, True, True])
        assert select_action(init_posterior(3), "rare-minus", mask, rng) == 1

    def test_rare_plus_damps_explored_feature(self):
        # feature 0 has been rewarded often; phi should flip the ranking
        state = PosteriorState(np.array([5.0, 1.0]), np.array([1.0, 5.0]))
        theta = [0.9, 0.3]
        minus = select_action(state, "rare-minus", np.ones(2, bool), FakeRng([theta]))
        plus = select_action(state, "rare-plus", np.ones(2, bool), FakeRng([theta]))
        assert minus == 0
        assert plus == 1
        phi = expected_phi(state)
        assert phi[0] * theta[0] < phi[1] * theta[1]

    def test_sample_variant_uses_one_fused_draw(self):
        state = PosteriorState(np.array([2.0, 1.0]), np.array([1.0, 3.0]))
        rng = FakeRng([[0.5, 0.8, 0.9, 0.1]])
        picked = select_action(state, "sample", np.ones(2, bool), rng)
        (a, b), = rng.calls
        assert a.tolist() == [2.0, 1.0, 3.0, 4.0]  # alpha then alpha+beta
        assert b.tolist() == [1.0, 3.0, 4.0, 1.0]  # beta then alpha**2
        # scores: [0.5*0.9, 0.8*0.1]
        assert picked == 0

    def test_stream_use_is_mask_independent(self):
        state = PosteriorState(np.array([2.0, 3.0, 1.0]), np.array([1.0, 2.0, 4.0]))
        rng_a, rng_b = SeededRng(42), SeededRng(42)
        select_action(state, "sample", np.array([True, False, True]), rng_a)
        select_action(state, "sample", np.array([False, True, False]), rng_b)
        assert rng_a.random() == rng_b.random()

    def test_no_selectable_feature_raises(self):
        with pytest.raises(EmptyCorpusError):
            select_action(init_posterior(2), "sample", np.zeros(2, bool), SeededRng(0))

    def test_bad_mask_shape_raises(self):
        with pytest.raises(DimensionMismatch):
            select_action(init_posterior(2), "sample", np.ones(3, bool), SeededRng(0))

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError, match="rare-minus"):
            select_action(init_posterior(2), "bogus", np.ones(2, bool), SeededRng(0))


def test_variant_parse_round_trip():
    assert Variant.parse("sample") is Variant.SAMPLE
    assert Variant.parse(Variant.RARE_PLUS) is Variant.RARE_PLUS


def test_posterior_snapshot_round_trip(tmp_path):
    state = PosteriorState(np.array([2.0, 7.0, 1.0]), np.array([4.0, 1.0, 9.0]))
    path = tmp_path / "post.txt"
    save_posterior(state, path)
    back = load_posterior(path)
    assert np.array_equal(back.alpha, state.alpha)
    assert np.array_equal(back.beta, state.beta)


def test_posterior_snapshot_rejects_garbage(tmp_path):
    path = tmp_path / "post.txt"
    path.write_text("not a snapshot\n")
    with pytest.raises(SnapshotError):
        load_posterior(path)
    with pytest.raises(SnapshotError):
        load_posterior(tmp_path / "missing.txt")


def test_posterior_snapshot_rejects_length_mismatch(tmp_path):
    state = init_posterior(3)
    path = tmp_path / "post.txt"
    save_posterior(state, path)
    lines = path.read_text().splitlines()
    lines[1] = "5"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(SnapshotError):
        load_posterior(path)
