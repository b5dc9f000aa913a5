"""Per-slot channel selection and belief bookkeeping.

The scheduler's knowledge of each channel is a belief pair: the occupancy
it last observed there and how many slots ago that was (the age).  Ages
start at 1 and reset to 1 on every access; observations only change when a
channel is accessed, because the only feedback is the ACK of an attempted
transmission.

Decision functions return boolean transmit masks over the channel axis and
accept arrays with any leading batch shape, so one code path serves both a
single episode and a batch of replicas.  Index-based selection gates
believed-occupied channels behind their optimal waiting threshold, then
takes the top L of the eligible set by index descending with ties broken
by lower age and then lower channel id; when fewer than L channels are
eligible the rest of the budget stays idle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

__all__ = [
    "NEVER",
    "Beliefs",
    "PolicySpec",
    "update_beliefs",
    "decide_index",
    "select_top_ranked",
    "decide_pure_random",
    "decide_check_empty",
    "decide_correlated",
]

# Sentinel threshold for "never transmit on a believed-occupied channel";
# larger than any reachable age.
NEVER = np.iinfo(np.int32).max

POLICY_KINDS = (
    "pure_random",
    "check_empty_random",
    "whittle",
    "heuristic",
    "correlated_heuristic",
)
LEARNING_MODES = ("off", "mle", "ewmle")


@dataclass(frozen=True)
class PolicySpec:
    """Which scheduler to run, and whether it estimates flip probabilities.

    ``kind`` is one of pure_random, check_empty_random, whittle, heuristic
    or correlated_heuristic; ``learning`` (off/mle/ewmle) is only valid on
    the whittle and heuristic kinds.
    """

    kind: str
    learning: str = "off"

    def __post_init__(self) -> None:
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.learning not in LEARNING_MODES:
            raise ValueError(f"unknown learning mode {self.learning!r}")
        if self.learning != "off" and self.kind not in ("whittle", "heuristic"):
            raise ValueError(
                f"learning is only supported for index policies, got {self.label}"
            )

    @property
    def label(self) -> str:
        """Stable token used in configs and CSV output."""
        if self.learning == "off":
            return self.kind
        return f"{self.kind}_{self.learning}"

    @classmethod
    def parse(cls, token: str) -> "PolicySpec":
        token = token.strip()
        for mode in ("mle", "ewmle"):
            suffix = f"_{mode}"
            if token.endswith(suffix):
                return cls(kind=token[: -len(suffix)], learning=mode)
        return cls(kind=token)


@dataclass
class Beliefs:
    """Belief state for every channel: last observed occupancy and its age.

    ``last_observed`` is boolean (True = occupied), ``age`` integer >= 1;
    both have shape ``batch_shape + (N,)``.
    """

    last_observed: np.ndarray
    age: np.ndarray

    @classmethod
    def initial(cls, shape: tuple[int, ...]) -> "Beliefs":
        """Fresh beliefs: every channel assumed occupied with age 1."""
        return cls(
            last_observed=np.ones(shape, dtype=bool),
            age=np.ones(shape, dtype=np.int32),
        )

    def ack_update(self, transmitted: np.ndarray, occupancy: np.ndarray) -> None:
        """Fold in one slot of ACKs, in place.

        Accessed channels get age 1 and the true occupancy just revealed;
        everything else ages by one slot.
        """
        self.age = np.where(transmitted, np.int32(1), self.age + np.int32(1))
        self.last_observed = np.where(transmitted, occupancy, self.last_observed)


def update_beliefs(
    beliefs: Beliefs, transmit_set, observations: Mapping[int, int]
) -> Beliefs:
    """Functional single-episode belief update from a slot's ACKs.

    ``observations`` must be keyed by exactly the transmitted channels;
    anything else is rejected.  Returns a new :class:`Beliefs`.
    """
    chans = sorted(transmit_set)
    if set(observations) != set(chans):
        raise ValueError("observations must cover exactly the transmitted channels")
    n = beliefs.age.shape[-1]
    mask = np.zeros(n, dtype=bool)
    mask[chans] = True
    occupancy = np.zeros(n, dtype=bool)
    for ch in chans:
        occupancy[ch] = bool(observations[ch])
    updated = Beliefs(beliefs.last_observed.copy(), beliefs.age.copy())
    updated.ack_update(mask, occupancy)
    return updated


def select_top_ranked(index_values: np.ndarray, age: np.ndarray, limit: int) -> np.ndarray:
    """Channel order by index descending, ties to lower age then lower id.

    Returns the first ``limit`` columns of the full ranking (shape
    ``batch_shape + (limit,)``).
    """
    order = np.lexsort((age, -index_values), axis=-1)
    return order[..., :limit]


def _flatten_top(top: np.ndarray, channels: int) -> np.ndarray:
    """Flat positions of per-row channel picks inside the raveled array."""
    if top.ndim == 1:
        return top
    rows = np.arange(top.shape[0]) * channels
    return (top + rows[:, None]).ravel()


def decide_index(
    beliefs: Beliefs,
    index_values: np.ndarray,
    thresholds: np.ndarray,
    limit: int,
) -> np.ndarray:
    """Threshold-gated top-L selection by priority index.

    ``thresholds`` holds each channel's optimal waiting threshold (use
    :data:`NEVER` for "never probe"; broadcastable to the belief shape).
    A channel is eligible if it was last seen free, or if its age has
    reached its threshold; the decision is the ``limit`` highest-index
    eligible channels (fewer when not enough are eligible), so gated
    channels never eat into the access budget.
    """
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    shape = beliefs.age.shape
    eligible = ~beliefs.last_observed | (beliefs.age >= thresholds)
    ranked = np.where(eligible, index_values, -np.inf)
    top = select_top_ranked(ranked, beliefs.age, limit)
    flat = _flatten_top(top, shape[-1])
    fire = eligible.ravel()[flat]
    decision = np.zeros(shape, dtype=bool)
    decision.ravel()[flat] = fire
    return decision


def decide_pure_random(keys: np.ndarray, limit: int) -> np.ndarray:
    """Uniformly random distinct ``limit``-subset, always transmitted.

    ``keys`` is one i.i.d. uniform draw per channel; the channels with the
    ``limit`` smallest keys form a uniform random subset.
    """
    n = keys.shape[-1]
    if limit >= n:
        return np.ones(keys.shape, dtype=bool)
    picked = np.argpartition(keys, limit - 1, axis=-1)[..., :limit]
    decision = np.zeros(keys.shape, dtype=bool)
    np.put_along_axis(decision, picked, True, axis=-1)
    return decision


def decide_check_empty(held: np.ndarray, keys: np.ndarray, limit: int) -> np.ndarray:
    """Keep channels that just succeeded; redraw the rest uniformly.

    ``held`` marks channels whose previous transmission went through (at
    most ``limit`` of them).  Every lost slot is refilled by a uniform
    draw over the channels not currently held, all distinct; the result is
    transmitted in full.
    """
    masked = np.where(held, np.inf, keys)
    ranks = np.argsort(np.argsort(masked, axis=-1), axis=-1)
    need = limit - held.sum(axis=-1, keepdims=True)
    return held | (ranks < need)


def decide_correlated(
    beliefs: Beliefs,
    index_values: np.ndarray,
    limit: int,
) -> np.ndarray:
    """Top-L selection by band index with no threshold gate.

    Believed-free channels rank first (+inf index, ties to lower age then
    lower id); all selected channels transmit, because the waiting
    threshold is a construct of the independent-channel problem and has no
    meaning under band correlation.
    """
    shape = beliefs.age.shape
    top = select_top_ranked(index_values, beliefs.age, limit)
    decision = np.zeros(shape, dtype=bool)
    decision.ravel()[_flatten_top(top, shape[-1])] = True
    return decision
