"""Time-slotted episode engine.

Runs one scheduling policy against one occupancy world for a fixed horizon
and accounts successes, collisions and attempts.  The per-slot cycle is:

1. the policy picks a transmit set from its beliefs;
2. the true occupancy of the transmitted channels scores the slot
   (free = one packet delivered, occupied = one collision);
3. the policy and the belief state absorb the ACKs;
4. the world advances one step.

A whole batch of independent replicas is stepped at once: every replica
owns its own seeded PCG64 stream, and all randomness is pre-drawn from
those streams in a fixed order (world draws, then policy draws, per chunk
of slots), so a replica's trajectory depends only on its seed — never on
the batch it happens to share, the worker count, or the policy being run.
An omniscient-genie success count (up to L truly free channels per slot)
is tracked alongside as an in-episode upper reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .environment import BandWorld, IndependentWorld, ramp_schedule
from .estimation import EstimatorBank
from .indices import (
    correlated_index_values,
    heuristic_index_values,
    whittle_index_values,
)
from .markov import ChannelParams
from .scheduling import (
    NEVER,
    Beliefs,
    PolicySpec,
    decide_check_empty,
    decide_correlated,
    decide_index,
    decide_pure_random,
)
from .single_channel import optimal_threshold

__all__ = ["RunMetrics", "run_episodes"]

_MASK64 = (1 << 64) - 1
_CHUNK = 512
# A per-channel flip-probability estimate must drift at least this far
# before the channel's waiting threshold is recomputed.
_REFRESH_EPS = 1e-3


@dataclass(frozen=True)
class RunMetrics:
    """Accumulated counters of one episode plus its derived rates."""

    successes: int
    collisions: int
    attempts: int
    genie_successes: int
    horizon: int
    limit: int
    gamma: float
    seed: int

    @property
    def normalized_throughput(self) -> float:
        return self.successes / (self.limit * self.horizon)

    @property
    def collision_rate(self) -> float:
        return self.collisions / (self.limit * self.horizon)

    @property
    def collision_per_attempt(self) -> float:
        return self.collisions / max(self.attempts, 1)

    @property
    def attempt_fraction(self) -> float:
        return self.attempts / (self.limit * self.horizon)

    @property
    def objective(self) -> float:
        return (self.successes - self.gamma * self.collisions) / (
            self.limit * self.horizon
        )


class _ThresholdCache:
    """Optimal waiting thresholds H*(q, D) memoized per distinct q."""

    def __init__(self, cost: float) -> None:
        self.cost = cost
        self._known: dict[float, int] = {}

    def lookup(self, q: float) -> int:
        thr = self._known.get(q)
        if thr is None:
            h = optimal_threshold(ChannelParams(q), self.cost)
            thr = NEVER if math.isinf(h) else int(h)
            self._known[q] = thr
        return thr

    def vector(self, qs: np.ndarray) -> np.ndarray:
        return np.array([self.lookup(float(v)) for v in qs], dtype=np.int32)


class _IndexDriver:
    """Whittle / packet-count index policy, optionally learning q online."""

    def __init__(self, policy, limit, gamma, qs, schedule, batch, channels, config):
        self.kind = policy.kind
        self.limit = limit
        self.cache = _ThresholdCache(gamma / (1.0 + gamma))
        self.schedule = schedule
        self.bank = None
        if policy.learning != "off":
            shape = (batch, channels)
            self.bank = EstimatorBank(
                shape,
                prior_q=config.prior_q,
                forgetting=config.forgetting if policy.learning == "ewmle" else 1.0,
                window_length=config.window_length,
            )
            self.q = np.full(shape, config.prior_q)
            self.q_at = self.q.copy()
            self.thresholds = np.full(
                shape, self.cache.lookup(config.prior_q), dtype=np.int32
            )
            self.prev_u = np.zeros(shape, dtype=bool)
        elif schedule is not None:
            self.q = schedule.at(0).copy()
            self.q_at = self.q.copy()
            self.thresholds = self.cache.vector(self.q)
        else:
            self.q = np.asarray(qs, dtype=np.float64)
            self.q_at = self.q
            self.thresholds = self.cache.vector(self.q)

    def _refresh_thresholds(self, q_now: np.ndarray) -> None:
        changed = np.abs(q_now - self.q_at) > _REFRESH_EPS
        if changed.any():
            thr = self.thresholds.ravel()
            q_at = self.q_at.ravel()
            flat = np.flatnonzero(changed.ravel())
            for i, v in zip(flat.tolist(), q_now.ravel()[flat].tolist()):
                thr[i] = self.cache.lookup(v)
                q_at[i] = v

    def decide(self, slot, beliefs, keys):
        if self.schedule is not None and self.bank is None:
            self.q = self.schedule.at(slot)
            self._refresh_thresholds(self.q)
        if self.kind == "whittle":
            values = whittle_index_values(beliefs.last_observed, beliefs.age, self.q)
        else:
            values = heuristic_index_values(beliefs.last_observed, beliefs.age, self.q)
        return decide_index(beliefs, values, self.thresholds, self.limit)

    def observe(self, decision, occupancy, beliefs):
        if self.bank is None:
            return
        informative = decision & self.prev_u & ~beliefs.last_observed
        self.bank.record(informative, occupancy)
        self.prev_u = decision

    def end_slot(self):
        if self.bank is None:
            return
        self.bank.end_slot()
        self.q = self.bank.estimates()
        self._refresh_thresholds(self.q)


class _PureRandomDriver:
    def __init__(self, limit):
        self.limit = limit

    def decide(self, slot, beliefs, keys):
        return decide_pure_random(keys, self.limit)

    def observe(self, decision, occupancy, beliefs):
        pass

    def end_slot(self):
        pass


class _CheckEmptyDriver:
    def __init__(self, limit, batch, channels):
        self.limit = limit
        self.held = np.zeros((batch, channels), dtype=bool)

    def decide(self, slot, beliefs, keys):
        return decide_check_empty(self.held, keys, self.limit)

    def observe(self, decision, occupancy, beliefs):
        self.held = decision & ~occupancy

    def end_slot(self):
        pass


class _CorrelatedDriver:
    def __init__(self, limit, batch, channels, band_width, memory, age_over_selected):
        self.limit = limit
        self.band_width = band_width
        self.memory = memory
        self.age_over_selected = age_over_selected
        self.positions = np.arange(1, channels + 1, dtype=np.float64)
        self.center = np.full(batch, (1 + channels) / 2.0)
        self.selected_age = np.ones(batch)
        self.num_channels = channels

    def decide(self, slot, beliefs, keys):
        if self.age_over_selected:
            mean_age = self.selected_age[:, None]
        else:
            mean_age = beliefs.age.mean(axis=-1, keepdims=True)
        values = correlated_index_values(
            self.positions,
            beliefs.last_observed,
            self.center[:, None],
            mean_age,
            self.band_width,
        )
        return decide_correlated(beliefs, values, self.limit)

    def observe(self, decision, occupancy, beliefs):
        hits = decision & occupancy
        count = hits.sum(axis=-1)
        total = hits @ self.positions
        with np.errstate(invalid="ignore"):
            target = total / count
        blended = self.memory * self.center + (1.0 - self.memory) * target
        blended = np.clip(blended, 1.0, float(self.num_channels))
        self.center = np.where(count > 0, blended, self.center)
        if self.age_over_selected:
            self.selected_age = (decision * beliefs.age).sum(axis=-1) / np.maximum(
                decision.sum(axis=-1), 1
            )

    def end_slot(self):
        pass


def _make_driver(policy: PolicySpec, config, qs, schedule, batch: int):
    limit, channels = config.l, config.n
    if policy.kind in ("whittle", "heuristic"):
        return _IndexDriver(
            policy, limit, config.gamma, qs, schedule, batch, channels, config
        )
    if policy.kind == "pure_random":
        return _PureRandomDriver(limit)
    if policy.kind == "check_empty_random":
        return _CheckEmptyDriver(limit, batch, channels)
    return _CorrelatedDriver(
        limit,
        batch,
        channels,
        config.band_width,
        config.band_memory,
        config.age_over_selected,
    )


def run_episodes(config, policy: PolicySpec, seeds, slot_hook=None) -> list[RunMetrics]:
    """Run one episode per seed, batched, and return per-episode metrics.

    ``slot_hook(slot, decision, occupancy, beliefs)``, when given, is
    called once per slot (before the ACK update) with live (batch, N)
    views for instrumentation; copy anything you keep.
    """
    seeds = [int(s) & _MASK64 for s in seeds]
    batch, channels, limit = len(seeds), config.n, config.l
    horizon = config.horizon
    rngs = [np.random.Generator(np.random.PCG64(s)) for s in seeds]

    schedule = None
    qs = None
    if config.world == "independent":
        qs = config.channel_qs()
        if config.nonstationary:
            schedule = ramp_schedule(qs, horizon, config.q_drift)
        occupancy0 = np.stack([rng.random(channels) < 0.5 for rng in rngs])
        world = IndependentWorld(
            qs, batch_shape=(batch,), schedule=schedule, occupancy=occupancy0
        )
    else:
        world = BandWorld(
            channels, config.band_width, config.sigma, batch_shape=(batch,)
        )

    driver = _make_driver(policy, config, qs, schedule, batch)
    beliefs = Beliefs.initial((batch, channels))
    collisions = np.zeros(batch, dtype=np.int64)
    attempts = np.zeros(batch, dtype=np.int64)
    genie = np.zeros(batch, dtype=np.int64)

    band = config.world == "band"
    for start in range(0, horizon, _CHUNK):
        span = min(_CHUNK, horizon - start)
        if band:
            keys = np.stack([rng.random((span, channels)) for rng in rngs])
            walk = np.stack([rng.random(span) for rng in rngs])
            world_draws = walk
        else:
            world_draws = np.stack([rng.random((span, channels)) for rng in rngs])
            keys = np.stack([rng.random((span, channels)) for rng in rngs])
        for tau in range(span):
            slot = start + tau
            decision = driver.decide(slot, beliefs, keys[:, tau])
            occupied = world.occupancy
            hit = decision & occupied
            collisions += hit.sum(axis=-1)
            attempts += decision.sum(axis=-1)
            genie += np.minimum(
                channels - occupied.sum(axis=-1), np.int64(limit)
            )
            if slot_hook is not None:
                slot_hook(slot, decision, occupied, beliefs)
            driver.observe(decision, occupied, beliefs)
            beliefs.ack_update(decision, occupied)
            driver.end_slot()
            world.advance(world_draws[:, tau], slot)

    return [
        RunMetrics(
            successes=int(attempts[r] - collisions[r]),
            collisions=int(collisions[r]),
            attempts=int(attempts[r]),
            genie_successes=int(genie[r]),
            horizon=horizon,
            limit=limit,
            gamma=config.gamma,
            seed=seeds[r],
        )
        for r in range(batch)
    ]
