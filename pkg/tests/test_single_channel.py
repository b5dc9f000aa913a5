import math

import numpy as np
import pytest

from spectrumshare.markov import ChannelParams, flip_prob
from spectrumshare.single_channel import (
    NonConvergenceError,
    average_reward,
    best_threshold_policy,
    g_certificate,
    optimal_threshold,
    solve_dp,
)

GRID_Q = (0.05, 0.15, 0.25, 0.35, 0.45)
GRID_COSTS = tuple(round(0.1 * k, 1) for k in range(1, 10))


class TestAverageReward:
    @pytest.mark.parametrize("q", [0.05, 0.2, 0.45])
    def test_free_updates_at_zero_cost(self, q):
        # numerator q, denominator 2q: the stationary half split.
        assert average_reward(ChannelParams(q), 1, 0.0) == pytest.approx(0.5)

    def test_hand_arithmetic_point(self):
        # (0.375 - 0.625 * 0.25) / (0.375 + 0.5)
        assert average_reward(ChannelParams(0.25), 2, 0.25) == pytest.approx(0.25)

    def test_full_cost_never_pays(self):
        assert average_reward(ChannelParams(0.05), 1, 1.0) < 0

    def test_rejects_threshold_below_one(self):
        with pytest.raises(ValueError):
            average_reward(ChannelParams(0.2), 0, 0.1)


class TestOptimalThreshold:
    def test_zero_cost_probes_immediately(self):
        assert optimal_threshold(ChannelParams(0.05), 0.0) == 1

    def test_full_cost_never_transmits(self):
        assert math.isinf(optimal_threshold(ChannelParams(0.05), 1.0))

    def test_tie_goes_to_smaller_threshold(self):
        p = ChannelParams(0.25)
        assert optimal_threshold(p, 0.25) == 1
        lam = [average_reward(p, h, 0.25) for h in range(1, 11)]
        assert lam[0] == pytest.approx(lam[1], abs=1e-15)
        assert max(lam) == lam[0]

    def test_monotone_in_cost(self):
        for q in GRID_Q:
            p = ChannelParams(q)
            previous = 1
            for cost in np.linspace(0.0, 0.95, 40):
                h = optimal_threshold(p, float(cost))
                assert h >= previous
                previous = h

    def test_reward_curve_unimodal_with_increasing_peaks(self):
        p = ChannelParams(0.05)
        peaks = {}
        for cost in (0.0, 0.25, 0.5, 0.75):
            lam = np.array([average_reward(p, h, cost) for h in range(1, 120)])
            peak = int(np.argmax(lam))
            assert np.all(np.diff(lam[: peak + 1]) > 0) or peak == 0
            assert np.all(np.diff(lam[peak:]) < 0)
            peaks[cost] = peak + 1
            assert peaks[cost] == optimal_threshold(p, cost)
        assert peaks[0.0] == 1
        assert peaks[0.0] < peaks[0.25] <= peaks[0.5] <= peaks[0.75]
        assert math.isinf(optimal_threshold(p, 1.0))


class TestCertificate:
    def test_decreasing_in_threshold(self):
        p = ChannelParams(0.2)
        vals = [g_certificate(p, h, 0.5) for h in range(1, 51)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_brackets_optimal_gain(self):
        p = ChannelParams(0.25)
        cost = 0.3
        policy = best_threshold_policy(p, cost)
        assert policy.threshold == 2
        # differential value of the (free, age 1) state under this policy
        s = ((1.0 - p.q) - cost - policy.gain) / p.q
        assert g_certificate(p, 2, s) <= policy.gain <= g_certificate(p, 1, s)

    def test_certificate_brackets_across_grid(self):
        for q in GRID_Q:
            p = ChannelParams(q)
            for cost in GRID_COSTS:
                policy = best_threshold_policy(p, cost)
                if math.isinf(policy.threshold) or policy.threshold < 2:
                    continue
                h = int(policy.threshold)
                s = ((1.0 - q) - cost - policy.gain) / q
                assert g_certificate(p, h, s) <= policy.gain + 1e-12
                assert policy.gain <= g_certificate(p, h - 1, s) + 1e-12

    def test_vanishes_at_limit(self):
        p = ChannelParams(0.3)
        assert g_certificate(p, 5, -1.0 + 1e-12) == pytest.approx(0.0, abs=1e-10)

    def test_rejects_value_at_or_below_minus_one(self):
        with pytest.raises(ValueError):
            g_certificate(ChannelParams(0.3), 5, -1.0)


class TestSolveDp:
    def test_matches_closed_form_at_indifference_point(self):
        sol = solve_dp(ChannelParams(0.25), 0.25, delta_max=200, tolerance=1e-10)
        assert sol.gain == pytest.approx(0.25, abs=1e-6)
        assert sol.threshold in (1, 2)

    def test_zero_cost_transmits_everywhere(self):
        sol = solve_dp(ChannelParams(0.05), 0.0, delta_max=200, tolerance=1e-10)
        assert sol.gain == pytest.approx(0.5, abs=1e-6)
        assert sol.actions.all()

    def test_full_cost_never_transmits(self):
        sol = solve_dp(ChannelParams(0.3), 1.0, delta_max=200, tolerance=1e-10)
        assert sol.gain == pytest.approx(0.0, abs=1e-9)
        assert not sol.actions.any()
        assert math.isinf(sol.threshold)

    def test_action_table_is_threshold_shaped(self):
        for q, cost in ((0.05, 0.5), (0.25, 0.3), (0.45, 0.7)):
            sol = solve_dp(ChannelParams(q), cost, delta_max=120, tolerance=1e-9)
            occupied_row = sol.actions[1]
            assert np.all(np.diff(occupied_row.astype(int)) >= 0)
            if occupied_row.any():
                assert sol.actions[0].all()

    def test_bellman_residual_small(self):
        q, cost = 0.15, 0.4
        sol = solve_dp(ChannelParams(q), cost, delta_max=150, tolerance=1e-10)
        v = sol.values
        flips = np.array([flip_prob(ChannelParams(q), d) for d in range(1, 151)])
        p_free = np.stack([1.0 - flips, flips])
        transmit = p_free * (1.0 + v[0, 0]) + (1.0 - p_free) * v[1, 0] - cost
        wait = np.concatenate([v[:, 1:], v[:, -1:]], axis=1)
        residual = np.maximum(wait, transmit) - sol.gain - v
        assert np.abs(residual).max() < 1e-6

    def test_normalization_reference_state(self):
        sol = solve_dp(ChannelParams(0.2), 0.3, delta_max=100, tolerance=1e-9)
        assert sol.values[1, 0] == 0.0

    def test_oracle_agreement_smoke_grid(self):
        for q in (0.05, 0.25, 0.45):
            p = ChannelParams(q)
            for cost in (0.1, 0.5, 0.9):
                closed = best_threshold_policy(p, cost)
                sol = solve_dp(p, cost, delta_max=200, tolerance=1e-10)
                assert abs(closed.gain - sol.gain) <= 1e-6
                if math.isinf(closed.threshold):
                    assert math.isinf(sol.threshold)
                elif sol.threshold != closed.threshold:
                    alt = average_reward(p, int(sol.threshold), cost)
                    assert alt == pytest.approx(closed.gain, abs=1e-9)

    def test_validates_arguments(self):
        with pytest.raises(ValueError):
            solve_dp(ChannelParams(0.2), 0.3, delta_max=5)
        with pytest.raises(ValueError):
            solve_dp(ChannelParams(0.2), 0.3, tolerance=0.0)

    def test_reports_non_convergence(self):
        with pytest.raises(NonConvergenceError):
            solve_dp(ChannelParams(0.2), 0.3, max_iterations=2)
