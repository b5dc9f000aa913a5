"""Independent simulation oracles shared by the unit and acceptance tests.

Everything here works directly off Bernoulli flips of the occupancy chain;
none of it reuses the closed forms under test.
"""

from __future__ import annotations

import numpy as np


def spawn_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def simulate_chain(q: float, horizon: int, rng: np.random.Generator) -> np.ndarray:
    """One occupancy trajectory: X(0) ~ stationary, flips with probability q."""
    start = rng.random() < 0.5
    flips = rng.random(horizon - 1) < q
    parity = np.concatenate(([False], np.cumsum(flips) % 2 == 1))
    return parity ^ start


def threshold_policy_counts(
    q: float, threshold: int, horizon: int, seed: int
) -> tuple[int, int]:
    """(successes, attempts) of the wait-``threshold`` policy on one channel.

    Walks a pre-drawn occupancy path: start believing "occupied, age 1",
    probe once the age reaches the threshold, then keep transmitting until
    the first collision and wait again.  The effective cost only shifts
    the reward, so one walk serves every cost via
    (successes - cost * attempts) / horizon.
    """
    rng = spawn_rng(seed)
    occupancy = simulate_chain(q, horizon, rng)
    occupied_at = np.flatnonzero(occupancy)

    successes = 0
    attempts = 0
    t = threshold - 1  # age is t+1 before the first access
    while t < horizon:
        if occupancy[t]:
            attempts += 1  # probe collided
            t += threshold
            continue
        nxt = np.searchsorted(occupied_at, t)
        end = int(occupied_at[nxt]) if nxt < len(occupied_at) else horizon
        free_run = min(end, horizon) - t
        successes += free_run
        attempts += free_run
        if end >= horizon:
            break
        attempts += 1  # the collision that stops the run
        t = end + threshold
    return successes, attempts


def packets_before_collision(
    q: float, age: int, trials: int, seed: int
) -> np.ndarray:
    """Sample the packets-before-first-collision count, per trial.

    Starts every trial from "occupied", ages the chain ``age`` steps, then
    transmits until the channel is next occupied, counting successes.
    Pure chain simulation: only Bernoulli flips are drawn.
    """
    rng = spawn_rng(seed)
    state = np.ones(trials, dtype=bool)
    for _ in range(age):
        state ^= rng.random(trials) < q
    counts = np.zeros(trials, dtype=np.int64)
    active = np.flatnonzero(~state)
    while active.size:
        counts[active] += 1
        flipped = rng.random(active.size) < q
        active = active[~flipped]
    return counts
