"""Online estimation of per-channel flip probabilities.

The scheduler only learns a channel's occupancy by transmitting on it, so
the only informative samples are pairs of consecutive-slot observations on
the same channel.  Of those, only transitions that start from "free" feed
the estimator: the ratio n01 / (n01 + n00) is the maximum-likelihood
estimate of the flip probability.

For drifting chains a windowed variant applies an integer-floor exponential
decay to the accumulated counts at fixed window boundaries, so old
observations fade while the estimator still behaves like the plain MLE
inside each window.  A forgetting factor of 1 reproduces the plain
cumulative counts exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .markov import FREE, OCCUPIED

__all__ = ["TransitionCounts", "EstimatorBank", "record", "estimate", "advance_window"]

# Estimates are clamped into this closed interval so downstream index and
# threshold formulas always see a valid flip probability.
Q_FLOOR = 1e-4
Q_CEIL = 0.5 - 1e-4


@dataclass(frozen=True)
class TransitionCounts:
    """Accumulated free-origin transition counts for one channel.

    ``window_position`` counts slots since the last window boundary;
    ``forgetting`` is the decay factor applied to the counts at each
    boundary (1 = no decay); ``window_length`` is the boundary spacing in
    slots.
    """

    n01: int = 0
    n00: int = 0
    window_position: int = 0
    forgetting: float = 1.0
    window_length: int = 1000

    def __post_init__(self) -> None:
        if self.n01 < 0 or self.n00 < 0:
            raise ValueError("transition counts must be nonnegative")
        if not 0.0 < self.forgetting <= 1.0:
            raise ValueError(f"forgetting must lie in (0, 1], got {self.forgetting}")
        if self.window_length < 1:
            raise ValueError(f"window length must be >= 1, got {self.window_length}")


def record(counts: TransitionCounts, from_state: int, to_state: int) -> TransitionCounts:
    """Fold in one observed same-channel consecutive-slot transition.

    Only free-origin pairs are informative: 0->1 bumps ``n01``, 0->0 bumps
    ``n00``, and occupied-origin pairs leave the counts untouched.  The
    caller guarantees both slots were actually observed (transmitted on)
    back to back.
    """
    if from_state not in (FREE, OCCUPIED) or to_state not in (FREE, OCCUPIED):
        raise ValueError("states must be 0 or 1")
    if from_state != FREE:
        return counts
    if to_state == OCCUPIED:
        return replace(counts, n01=counts.n01 + 1)
    return replace(counts, n00=counts.n00 + 1)


def estimate(counts: TransitionCounts, prior_q: float) -> float:
    """Current flip-probability estimate, falling back to ``prior_q``.

    Returns n01 / (n01 + n00) clamped into [1e-4, 0.5 - 1e-4]; before any
    observation the prior is returned as-is.
    """
    if not 0.0 < prior_q < 0.5:
        raise ValueError(f"prior must lie in (0, 0.5), got {prior_q}")
    total = counts.n01 + counts.n00
    if total == 0:
        return prior_q
    return min(max(counts.n01 / total, Q_FLOOR), Q_CEIL)


def advance_window(counts: TransitionCounts) -> TransitionCounts:
    """Advance the window clock one slot, decaying counts at boundaries.

    Call once per slot, after the slot's transitions have been recorded.
    At every ``window_length``-th call both counts are replaced by the
    integer floor of ``forgetting`` times their value, then accumulation
    resumes.  With ``forgetting == 1`` the counts pass through unchanged.
    """
    position = counts.window_position + 1
    if position < counts.window_length:
        return replace(counts, window_position=position)
    return replace(
        counts,
        n01=math.floor(counts.forgetting * counts.n01),
        n00=math.floor(counts.forgetting * counts.n00),
        window_position=0,
    )


class EstimatorBank:
    """Vectorized transition-count estimators for a batch of channels.

    Semantically one :class:`TransitionCounts` per (run, channel) entry,
    all sharing the episode's slot clock, stored as integer arrays for the
    hot simulation path.
    """

    def __init__(
        self,
        shape: tuple[int, ...],
        prior_q: float,
        forgetting: float = 1.0,
        window_length: int = 1000,
    ) -> None:
        if not 0.0 < prior_q < 0.5:
            raise ValueError(f"prior must lie in (0, 0.5), got {prior_q}")
        if not 0.0 < forgetting <= 1.0:
            raise ValueError(f"forgetting must lie in (0, 1], got {forgetting}")
        self.prior_q = prior_q
        self.forgetting = forgetting
        self.window_length = window_length
        self.window_position = 0
        self.n01 = np.zeros(shape, dtype=np.int64)
        self.n00 = np.zeros(shape, dtype=np.int64)

    def record(self, free_origin: np.ndarray, went_occupied: np.ndarray) -> None:
        """Add one slot of transitions.

        ``free_origin`` flags entries whose observed pair started from a
        free channel; ``went_occupied`` flags where the later observation
        was "occupied".
        """
        self.n01 += free_origin & went_occupied
        self.n00 += free_origin & ~went_occupied

    def end_slot(self) -> None:
        """Advance the shared window clock; decay counts at boundaries."""
        self.window_position += 1
        if self.window_position >= self.window_length:
            if self.forgetting < 1.0:
                np.floor(self.forgetting * self.n01, out=self.n01, casting="unsafe")
                np.floor(self.forgetting * self.n00, out=self.n00, casting="unsafe")
            self.window_position = 0

    def estimates(self) -> np.ndarray:
        """Clamped per-entry estimates, prior where nothing was observed."""
        total = self.n01 + self.n00
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = self.n01 / total
        return np.where(
            total > 0, np.clip(ratio, Q_FLOOR, Q_CEIL), self.prior_q
        )
