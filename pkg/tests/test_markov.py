import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectrumshare.markov import (
    ChannelParams,
    flip_prob,
    flip_prob_or_zero,
    mixing_horizon,
    step,
)

from oracles import spawn_rng


def matrix_power_entry(q, delta):
    """Off-diagonal entry of the delta-step matrix by naive multiplication."""
    m = [[1 - q, q], [q, 1 - q]]
    cur = [row[:] for row in m]
    for _ in range(delta - 1):
        cur = [
            [
                cur[0][0] * m[0][0] + cur[0][1] * m[1][0],
                cur[0][0] * m[0][1] + cur[0][1] * m[1][1],
            ],
            [
                cur[1][0] * m[0][0] + cur[1][1] * m[1][0],
                cur[1][0] * m[0][1] + cur[1][1] * m[1][1],
            ],
        ]
    return cur[1][0]


class TestChannelParams:
    @pytest.mark.parametrize("q", [0.0, 0.5, -0.1, 0.7, 1.0])
    def test_rejects_out_of_range(self, q):
        with pytest.raises(ValueError):
            ChannelParams(q)

    @pytest.mark.parametrize("q", [1e-9, 0.25, 0.5 - 1e-9])
    def test_accepts_open_interval(self, q):
        assert ChannelParams(q).q == q


class TestFlipProb:
    def test_single_step_equals_q(self):
        assert flip_prob(ChannelParams(0.25), 1) == 0.25

    def test_two_steps_match_matrix_square(self):
        expected = matrix_power_entry(0.25, 2)
        assert expected == 0.375
        assert flip_prob(ChannelParams(0.25), 2) == pytest.approx(expected, abs=1e-15)

    def test_long_horizon_reaches_half(self):
        assert flip_prob(ChannelParams(0.1), 500) == pytest.approx(0.5, abs=1e-12)

    def test_rejects_zero_delta(self):
        with pytest.raises(ValueError):
            flip_prob(ChannelParams(0.3), 0)

    @settings(max_examples=30, deadline=None)
    @given(
        q=st.floats(min_value=0.001, max_value=0.499),
        delta=st.integers(min_value=1, max_value=1000),
    )
    def test_matches_matrix_power(self, q, delta):
        got = flip_prob(ChannelParams(q), delta)
        assert got == pytest.approx(matrix_power_entry(q, delta), abs=1e-12)

    def test_monotone_concave_bounded(self):
        for q in (0.01, 0.1, 0.25, 0.4, 0.49):
            p = ChannelParams(q)
            # strictness is resolvable in float64 up to the mixing horizon,
            # after which the value saturates at exactly 0.5
            horizon = min(mixing_horizon(p), 1000)
            vals = np.array([flip_prob(p, d) for d in range(1, horizon + 1)])
            assert np.all(np.diff(vals) > 0)
            assert np.all(np.diff(vals, 2) < 0)
            tail = np.array([flip_prob(p, d) for d in range(horizon, 1001)])
            assert np.all(vals > 0) and np.all(vals < 0.5)
            assert np.all(tail <= 0.5)
            if mixing_horizon(p) <= 1000:
                assert tail[-1] == pytest.approx(0.5, abs=1e-12)


class TestFlipProbOrZero:
    def test_zero_delta_is_exactly_zero(self):
        assert flip_prob_or_zero(ChannelParams(0.3), 0) == 0.0

    def test_one_step(self):
        assert flip_prob_or_zero(ChannelParams(0.3), 1) == 0.3

    def test_three_steps_match_matrix_cube(self):
        expected = matrix_power_entry(0.25, 3)
        assert expected == 0.4375
        assert flip_prob_or_zero(ChannelParams(0.25), 3) == pytest.approx(
            expected, abs=1e-15
        )

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            flip_prob_or_zero(ChannelParams(0.3), -1)


class TestStep:
    def test_frozen_chain_holds_state(self):
        p = ChannelParams(1e-9)
        rng = spawn_rng(1)
        state = 1
        for _ in range(1000):
            state = step(p, state, rng)
        assert state == 1

    def test_near_half_mixes_to_uniform(self):
        p = ChannelParams(0.5 - 1e-9)
        rng = spawn_rng(2)
        flips = sum(step(p, 1, rng) == 0 for _ in range(10_000))
        assert flips / 10_000 == pytest.approx(0.5, abs=0.02)

    def test_empirical_flip_frequency(self):
        p = ChannelParams(0.2)
        rng = spawn_rng(3)
        state = 0
        flips = 0
        for _ in range(10**6):
            nxt = step(p, state, rng)
            flips += nxt != state
            state = nxt
        assert flips / 10**6 == pytest.approx(0.2, abs=0.002)

    def test_consumes_one_draw_per_call(self):
        class Counting:
            def __init__(self):
                self.calls = 0

            def random(self):
                self.calls += 1
                return 0.99

        rng = Counting()
        step(ChannelParams(0.3), 0, rng)
        assert rng.calls == 1

    def test_rejects_bad_state(self):
        with pytest.raises(ValueError):
            step(ChannelParams(0.3), 2, spawn_rng(0))


def test_mixing_horizon_bounds_tail():
    p = ChannelParams(0.1)
    h = mixing_horizon(p)
    assert (1 - 2 * p.q) ** h < 1e-12
    assert (1 - 2 * p.q) ** (h - 1) >= 1e-12
    assert mixing_horizon(ChannelParams(1e-9)) == 100_000
