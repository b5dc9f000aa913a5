"""The decoupled single-channel access problem.

A secondary user watches one Markov-occupied channel and pays an effective
cost ``D`` per transmission.  The optimal policy is of threshold type:
always transmit while the channel was last seen free, and after observing
occupancy wait ``H`` slots before probing again.  This module provides the
closed-form time-average reward of a threshold policy, the optimal
threshold, the marginal-gain certificate that proves its optimality, and
an independent relative-value-iteration solver over the (last observation,
age) state space used to cross-check the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .markov import ChannelParams, flip_prob, mixing_horizon

__all__ = [
    "ThresholdPolicyEval",
    "DpSolution",
    "NonConvergenceError",
    "average_reward",
    "optimal_threshold",
    "best_threshold_policy",
    "g_certificate",
    "solve_dp",
]


@dataclass(frozen=True)
class ThresholdPolicyEval:
    """A threshold, the cost it was tuned for, and its time-average reward.

    ``threshold`` is ``math.inf`` for the never-transmit policy, whose gain
    is 0 by convention.
    """

    threshold: float
    effective_cost: float
    gain: float


class NonConvergenceError(RuntimeError):
    """Raised when relative value iteration fails to meet its tolerance."""


def average_reward(params: ChannelParams, threshold: int, cost: float) -> float:
    """Time-average reward of the wait-``threshold`` policy at cost ``cost``.

    May be negative, which callers read as "idling beats this threshold".
    """
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold}")
    f_h = flip_prob(params, threshold)
    q = params.q
    return (f_h - (f_h + q) * cost) / (f_h + threshold * q)


def _reward_curve(q: float, cost: float, h_cap: int) -> np.ndarray:
    """Vector of average rewards for thresholds 1..h_cap."""
    hs = np.arange(1, h_cap + 1, dtype=np.float64)
    f = 0.5 * (1.0 - np.power(1.0 - 2.0 * q, hs))
    f[0] = q
    return (f - (f + q) * cost) / (f + hs * q)


@lru_cache(maxsize=1 << 16)
def _best_threshold(q: float, cost: float) -> tuple[int | float, float]:
    """(threshold, gain) maximizing the average reward; (inf, 0.0) if none pays.

    Scans the closed-form reward curve.  The curve is unimodal in the
    threshold, so the scan grows geometrically until the maximum falls in
    the interior (or the mixing horizon is reached); ties go to the
    smaller threshold via first-argmax.
    """
    h_max = mixing_horizon(ChannelParams(q))
    h_cap = min(256, h_max)
    while True:
        lam = _reward_curve(q, cost, h_cap)
        best = int(np.argmax(lam))
        if best < h_cap - 1 or h_cap == h_max:
            break
        h_cap = min(2 * h_cap, h_max)
    gain = float(lam[best])
    if gain <= 0.0:
        return math.inf, 0.0
    return best + 1, gain


def optimal_threshold(params: ChannelParams, cost: float) -> int | float:
    """Reward-maximizing threshold; ``math.inf`` when no threshold is profitable.

    Ties between equally good thresholds resolve to the smaller one, so
    the policy never waits longer than necessary.
    """
    h, _ = _best_threshold(params.q, cost)
    return h


def best_threshold_policy(params: ChannelParams, cost: float) -> ThresholdPolicyEval:
    """Bundle the optimal threshold with its closed-form gain."""
    h, gain = _best_threshold(params.q, cost)
    return ThresholdPolicyEval(threshold=h, effective_cost=cost, gain=gain)


def g_certificate(params: ChannelParams, threshold: int, relative_value_S: float) -> float:
    """Marginal gain of extending the wait from ``threshold`` to ``threshold + 1``.

    Defined as (flip_prob(H+1) - flip_prob(H)) * (S + 1) where S is the
    differential value of the (free, age 1) state.  A threshold H* is
    optimal exactly when g(H*) <= gain <= g(H* - 1); g is strictly
    decreasing in H whenever S > -1, which is required here.
    """
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold}")
    if relative_value_S <= -1.0:
        raise ValueError(
            f"relative value must exceed -1, got {relative_value_S}"
        )
    gap = flip_prob(params, threshold + 1) - flip_prob(params, threshold)
    return gap * (relative_value_S + 1.0)


@dataclass
class DpSolution:
    """Converged relative-value-iteration output.

    ``values[x, d-1]`` is the differential value of state (last
    observation ``x``, age ``d``), normalized so values[1, 0] == 0.
    ``actions`` holds the greedy transmit decision (1 = transmit) per
    state; ``gain`` is the average-reward estimate.
    """

    gain: float
    values: np.ndarray
    actions: np.ndarray
    delta_max: int
    iterations: int

    @property
    def threshold(self) -> float:
        """Smallest age at which the solver transmits on a believed-occupied
        channel, ``math.inf`` if it never does."""
        hits = np.flatnonzero(self.actions[1])
        if hits.size == 0:
            return math.inf
        return float(hits[0] + 1)


def solve_dp(
    params: ChannelParams,
    cost: float,
    delta_max: int = 200,
    tolerance: float = 1e-10,
    max_iterations: int = 2_000_000,
) -> DpSolution:
    """Solve the single-channel average-reward problem by relative value iteration.

    The state space is (last observation in {0, 1}) x (age in 1..delta_max);
    beyond ``delta_max`` the belief is numerically stationary, so the wait
    action self-loops at the boundary.  Iteration stops when the span of
    successive Bellman updates drops below ``tolerance``; the gain is the
    midpoint of that residual.  Raises :class:`NonConvergenceError` if the
    span never gets there.
    """
    if delta_max < 10:
        raise ValueError(f"delta_max must be >= 10, got {delta_max}")
    if tolerance <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")

    q = params.q
    ages = np.arange(1, delta_max + 1, dtype=np.float64)
    p_flip = 0.5 * (1.0 - np.power(1.0 - 2.0 * q, ages))
    p_flip[0] = q
    # p_free[x, d-1]: probability the channel is free now given (x, age d).
    p_free = np.stack([1.0 - p_flip, p_flip])

    v = np.zeros((2, delta_max))
    wait = np.empty_like(v)
    gain = 0.0
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        transmit = p_free * (1.0 + v[0, 0]) + (1.0 - p_free) * v[1, 0] - cost
        wait[:, :-1] = v[:, 1:]
        wait[:, -1] = v[:, -1]
        updated = np.maximum(wait, transmit)
        diff = updated - v
        hi = diff.max()
        lo = diff.min()
        v = updated - updated[1, 0]
        if hi - lo < tolerance:
            gain = 0.5 * (hi + lo)
            break
    else:
        raise NonConvergenceError(
            f"span above {tolerance} after {max_iterations} sweeps "
            f"(q={q}, cost={cost}, delta_max={delta_max})"
        )

    transmit = p_free * (1.0 + v[0, 0]) + (1.0 - p_free) * v[1, 0] - cost
    wait[:, :-1] = v[:, 1:]
    wait[:, -1] = v[:, -1]
    actions = (transmit >= wait).astype(np.int8)
    return DpSolution(
        gain=float(gain),
        values=v,
        actions=actions,
        delta_max=delta_max,
        iterations=iterations,
    )
