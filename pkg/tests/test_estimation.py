import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectrumshare.estimation import (
    EstimatorBank,
    Q_CEIL,
    Q_FLOOR,
    TransitionCounts,
    advance_window,
    estimate,
    record,
)
from spectrumshare.markov import ChannelParams

from oracles import spawn_rng


class TestRecord:
    def test_free_to_occupied_bumps_n01(self):
        counts = record(TransitionCounts(), 0, 1)
        assert (counts.n01, counts.n00) == (1, 0)

    def test_free_to_free_bumps_n00(self):
        counts = record(TransitionCounts(), 0, 0)
        assert (counts.n01, counts.n00) == (0, 1)

    def test_occupied_origin_is_ignored(self):
        base = TransitionCounts(n01=2, n00=5)
        assert record(base, 1, 0) == base
        assert record(base, 1, 1) == base

    def test_rejects_non_binary_states(self):
        with pytest.raises(ValueError):
            record(TransitionCounts(), 2, 0)


class TestEstimate:
    def test_plain_ratio(self):
        assert estimate(TransitionCounts(n01=1, n00=3), 0.3) == 0.25

    def test_prior_fallback_when_empty(self):
        assert estimate(TransitionCounts(), 0.3) == 0.3

    def test_clamped_away_from_zero_and_half(self):
        assert estimate(TransitionCounts(n01=0, n00=50), 0.3) == Q_FLOOR
        assert estimate(TransitionCounts(n01=50, n00=0), 0.3) == Q_CEIL

    def test_rejects_bad_prior(self):
        with pytest.raises(ValueError):
            estimate(TransitionCounts(), 0.5)

    @settings(max_examples=100, deadline=None)
    @given(n01=st.integers(0, 10**6), n00=st.integers(0, 10**6))
    def test_always_yields_valid_channel_params(self, n01, n00):
        q = estimate(TransitionCounts(n01=n01, n00=n00), 0.3)
        ChannelParams(q)  # must never raise


class TestAdvanceWindow:
    def test_floor_decay_at_boundary(self):
        counts = TransitionCounts(
            n01=7, n00=4, window_position=999, forgetting=0.5, window_length=1000
        )
        decayed = advance_window(counts)
        assert (decayed.n01, decayed.n00) == (3, 2)
        assert decayed.window_position == 0

    def test_identity_forgetting_keeps_counts(self):
        counts = TransitionCounts(
            n01=7, n00=4, window_position=9, forgetting=1.0, window_length=10
        )
        decayed = advance_window(counts)
        assert (decayed.n01, decayed.n00) == (7, 4)
        assert decayed.window_position == 0

    def test_non_boundary_only_ticks_clock(self):
        counts = TransitionCounts(
            n01=7, n00=4, window_position=3, forgetting=0.5, window_length=10
        )
        moved = advance_window(counts)
        assert (moved.n01, moved.n00, moved.window_position) == (7, 4, 4)

    def test_validation(self):
        with pytest.raises(ValueError):
            TransitionCounts(n01=-1)
        with pytest.raises(ValueError):
            TransitionCounts(forgetting=0.0)
        with pytest.raises(ValueError):
            TransitionCounts(window_length=0)


def _drive(counts, transitions, slots_per_record=1):
    for from_state, to_state in transitions:
        counts = record(counts, from_state, to_state)
        for _ in range(slots_per_record):
            counts = advance_window(counts)
    return counts


def test_unit_forgetting_reproduces_plain_mle():
    rng = spawn_rng(5)
    stream = [(int(rng.random() < 0.5), int(rng.random() < 0.4)) for _ in range(5000)]
    plain = TransitionCounts(window_length=10**9)
    windowed = TransitionCounts(forgetting=1.0, window_length=50)
    plain = _drive(plain, stream)
    windowed = _drive(windowed, stream)
    assert estimate(plain, 0.3) == estimate(windowed, 0.3)
    assert (plain.n01, plain.n00) == (windowed.n01, windowed.n00)


def test_consistency_on_stationary_streams():
    # 1000 trials of 10^4 free-origin transitions at the true q
    rng = spawn_rng(11)
    q, n = 0.2, 10**4
    hits = rng.binomial(n, q, size=1000)
    bound = 3.0 * np.sqrt(q * (1 - q) / n)
    within = 0
    for k in hits:
        q_hat = estimate(TransitionCounts(n01=int(k), n00=n - int(k)), 0.3)
        within += abs(q_hat - q) <= bound
    assert within / 1000 >= 0.99


def test_windowed_estimator_tracks_drift_better_than_plain():
    # flip probability ramps 0.1 -> 0.4 over 30000 slots, fully observed
    rng = spawn_rng(3)
    horizon = 30_000
    plain = TransitionCounts(window_length=10**9)
    windowed = TransitionCounts(forgetting=0.5, window_length=1000)
    state = 0
    err_plain = 0.0
    err_windowed = 0.0
    for t in range(horizon):
        q_t = 0.1 + 0.3 * t / horizon
        nxt = state ^ (rng.random() < q_t)
        plain = record(plain, state, nxt)
        windowed = record(windowed, state, nxt)
        plain = advance_window(plain)
        windowed = advance_window(windowed)
        err_plain += abs(estimate(plain, 0.3) - q_t)
        err_windowed += abs(estimate(windowed, 0.3) - q_t)
        state = nxt
    assert err_windowed < err_plain


class TestEstimatorBank:
    def test_matches_scalar_path(self):
        rng = spawn_rng(9)
        bank = EstimatorBank((2,), prior_q=0.3, forgetting=0.5, window_length=7)
        scalars = [
            TransitionCounts(forgetting=0.5, window_length=7) for _ in range(2)
        ]
        for _ in range(100):
            origins = rng.random(2) < 0.6
            went = rng.random(2) < 0.3
            bank.record(origins, went)
            bank.end_slot()
            for i in range(2):
                if origins[i]:
                    scalars[i] = record(scalars[i], 0, int(went[i]))
                scalars[i] = advance_window(scalars[i])
        expected = [estimate(c, 0.3) for c in scalars]
        np.testing.assert_allclose(bank.estimates(), expected)

    def test_prior_when_unobserved(self):
        bank = EstimatorBank((3,), prior_q=0.25)
        np.testing.assert_allclose(bank.estimates(), [0.25] * 3)
