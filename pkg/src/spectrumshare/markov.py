"""Symmetric two-state Markov occupancy chains.

Each channel is modelled by a chain over {free, occupied} that flips state
with probability ``q`` per slot and stays put otherwise.  Because the chain
is symmetric, every multi-step transition probability has the closed form

    P(state differs after delta slots) = (1 - (1 - 2q)**delta) / 2,

which is what this module computes; nothing beyond ``q`` is ever stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "FREE",
    "OCCUPIED",
    "ChannelParams",
    "flip_prob",
    "flip_prob_or_zero",
    "mixing_horizon",
    "step",
]

FREE = 0
OCCUPIED = 1


@dataclass(frozen=True)
class ChannelParams:
    """Flip probability of one channel's occupancy chain.

    ``q`` must lie strictly inside (0, 0.5): the chain is persistent
    (more likely to hold its state than to flip) and never degenerate.
    """

    q: float

    def __post_init__(self) -> None:
        if not 0.0 < self.q < 0.5:
            raise ValueError(
                f"flip probability must lie strictly in (0, 0.5), got {self.q!r}"
            )


def flip_prob(params: ChannelParams, delta: int) -> float:
    """Probability that the occupancy differs from its value ``delta`` slots ago.

    Closed form for the off-diagonal entry of the delta-step transition
    matrix.  Strictly increasing in ``delta`` with limit 1/2.  ``delta``
    must be >= 1; callers that need the zero-step convention (probability
    exactly 0) use :func:`flip_prob_or_zero`.
    """
    if delta < 1:
        raise ValueError(f"delta must be >= 1, got {delta}")
    if delta == 1:
        return params.q
    return 0.5 * (1.0 - (1.0 - 2.0 * params.q) ** delta)


def flip_prob_or_zero(params: ChannelParams, delta: int) -> float:
    """Like :func:`flip_prob` but maps ``delta == 0`` to exactly 0.

    The zero-step transition matrix is the identity, so its off-diagonal
    entry is 0; index formulas evaluated at age 1 rely on this convention.
    """
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    if delta == 0:
        return 0.0
    return flip_prob(params, delta)


def step(params: ChannelParams, current: int, rng) -> int:
    """Advance the occupancy one slot, flipping with probability ``q``.

    Consumes exactly one uniform draw from ``rng`` (a
    ``numpy.random.Generator`` or anything with a ``random()`` method).
    """
    if current not in (FREE, OCCUPIED):
        raise ValueError(f"occupancy must be 0 or 1, got {current!r}")
    flipped = rng.random() < params.q
    return current ^ int(flipped)


def mixing_horizon(params: ChannelParams, eps: float = 1e-12, cap: int = 100_000) -> int:
    """Smallest horizon H with (1 - 2q)**H < eps, capped at ``cap``.

    Beyond this age the belief about the channel is numerically
    indistinguishable from the stationary 50/50 split.
    """
    base = 1.0 - 2.0 * params.q
    h = int(math.ceil(math.log(eps) / math.log(base)))
    return max(1, min(h, cap))
