"""Ground-truth primary-user occupancy processes.

Two world models:

* :class:`IndependentWorld` — every channel evolves as its own symmetric
  two-state Markov chain, optionally with a per-channel piecewise-linear
  schedule for the flip probability (slowly drifting statistics).
* :class:`BandWorld` — the primary user occupies one contiguous block of
  channels whose center performs a discretized, clamped Gaussian random
  walk.

Both support a leading batch dimension so many independent replicas can be
stepped at once, and both separate "draw randomness" from "apply physics"
(``step`` vs ``advance``) so the simulation engine can pre-draw uniforms
from per-replica seeded streams.  Gaussian steps are produced by applying
the inverse normal CDF to one uniform draw, which pins the sampling
algorithm for bit-reproducible trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

__all__ = [
    "PiecewiseLinearSchedule",
    "ramp_schedule",
    "IndependentWorld",
    "BandWorld",
    "round_half_away",
]

Q_LOW = 0.01
Q_HIGH = 0.49


@dataclass(frozen=True)
class PiecewiseLinearSchedule:
    """Per-channel flip probability as a piecewise-linear function of the slot.

    ``times`` is a sorted (K,) array of slot indices and ``values`` a
    (K, N) array of flip probabilities; evaluation interpolates linearly
    between breakpoints and holds the end values outside the range.  All
    breakpoint values must lie strictly inside (0, 0.5).
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.float64)
        values = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        if times.ndim != 1 or len(times) != values.shape[0]:
            raise ValueError("need one row of values per breakpoint")
        if np.any(np.diff(times) <= 0):
            raise ValueError("breakpoint times must be strictly increasing")
        if np.any(values <= 0.0) or np.any(values >= 0.5):
            raise ValueError("scheduled flip probabilities must lie in (0, 0.5)")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def num_channels(self) -> int:
        return self.values.shape[1]

    def at(self, slot: int) -> np.ndarray:
        """Flip probabilities (N,) in effect at ``slot``."""
        t = float(np.clip(slot, self.times[0], self.times[-1]))
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        if k >= len(self.times) - 1:
            return self.values[-1]
        t0, t1 = self.times[k], self.times[k + 1]
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * self.values[k] + w * self.values[k + 1]


def ramp_schedule(
    base_q: np.ndarray, horizon: int, drift: float = 0.15
) -> PiecewiseLinearSchedule:
    """Default drifting-statistics schedule: half the channels ramp up, half down.

    Channel i ramps linearly from its initial flip probability to that
    value +/- ``drift`` over ``horizon`` slots (first half of the channels
    increasing, second half decreasing), with targets clamped into
    [0.01, 0.49].
    """
    base = np.asarray(base_q, dtype=np.float64)
    n = len(base)
    signs = np.where(np.arange(n) < n // 2, 1.0, -1.0)
    target = np.clip(base + signs * drift, Q_LOW, Q_HIGH)
    return PiecewiseLinearSchedule(
        times=np.array([0.0, float(horizon)]),
        values=np.stack([base, target]),
    )


class IndependentWorld:
    """A vector of independently evolving two-state occupancy chains.

    ``occupancy`` is a boolean array of shape ``batch_shape + (N,)``
    (True = occupied).  When no initial occupancy is supplied each channel
    starts from an independent 50/50 draw, the stationary distribution.
    """

    def __init__(
        self,
        qs,
        rng=None,
        batch_shape: tuple[int, ...] = (),
        schedule: PiecewiseLinearSchedule | None = None,
        occupancy: np.ndarray | None = None,
    ) -> None:
        self.qs = np.asarray(qs, dtype=np.float64)
        if np.any(self.qs <= 0.0) or np.any(self.qs >= 0.5):
            raise ValueError("flip probabilities must lie strictly in (0, 0.5)")
        if schedule is not None and schedule.num_channels != len(self.qs):
            raise ValueError("schedule and world disagree on channel count")
        self.schedule = schedule
        shape = tuple(batch_shape) + (len(self.qs),)
        if occupancy is not None:
            self.occupancy = np.asarray(occupancy, dtype=bool).reshape(shape).copy()
        else:
            if rng is None:
                raise ValueError("need either an rng or an explicit initial occupancy")
            self.occupancy = rng.random(shape) < 0.5

    @property
    def num_channels(self) -> int:
        return len(self.qs)

    def flip_probs(self, slot: int) -> np.ndarray:
        return self.schedule.at(slot) if self.schedule is not None else self.qs

    def advance(self, uniforms: np.ndarray, slot: int) -> None:
        """Apply one Markov step per channel using the supplied uniforms."""
        self.occupancy ^= uniforms < self.flip_probs(slot)

    def step(self, slot: int, rng) -> None:
        """Draw fresh per-channel uniforms from ``rng`` and advance one slot."""
        self.advance(rng.random(self.occupancy.shape), slot)


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Round to nearest integer with halves away from zero (not banker's)."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0.0, np.floor(x + 0.5), np.ceil(x - 0.5))


class BandWorld:
    """A contiguous occupied band whose center random-walks across the spectrum.

    The band covers positions ``center - B + B//2 + 1 .. center + B//2``
    (1-based), clipped to the spectrum edge, so exactly B channels are
    occupied whenever the band fits.  Each slot the center moves by a
    Gaussian step (std ``sigma``), rounded half-away-from-zero and clamped
    into [1, N].
    """

    def __init__(
        self,
        num_channels: int,
        band_width: int,
        sigma: float,
        batch_shape: tuple[int, ...] = (),
        center: int | None = None,
    ) -> None:
        if not 1 <= band_width <= num_channels:
            raise ValueError("band width must lie in [1, num channels]")
        if sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        self.num_channels = num_channels
        self.band_width = band_width
        self.sigma = sigma
        start = (num_channels + 1) // 2 if center is None else center
        if not 1 <= start <= num_channels:
            raise ValueError(f"center {start} outside [1, {num_channels}]")
        self.center = np.full(tuple(batch_shape), start, dtype=np.int64)
        self._positions = np.arange(1, num_channels + 1)

    @property
    def occupancy(self) -> np.ndarray:
        """Boolean occupancy, shape ``batch_shape + (N,)`` (True = occupied)."""
        hi = self.center[..., None] + self.band_width // 2
        lo = hi - self.band_width + 1
        return (self._positions >= lo) & (self._positions <= hi)

    def occupied_channels(self) -> list[int]:
        """1-based positions of the occupied channels (batch-free worlds)."""
        if self.center.ndim != 0:
            raise ValueError("occupied_channels() expects an unbatched world")
        return [int(p) for p in self._positions[self.occupancy]]

    def advance(self, uniforms: np.ndarray, slot: int = 0) -> None:
        """Move the center by one inverse-CDF Gaussian step per replica."""
        walk = self.sigma * ndtri(uniforms)
        moved = round_half_away(self.center + walk)
        self.center = np.clip(moved, 1, self.num_channels).astype(np.int64)

    def step(self, slot: int, rng) -> None:
        """Draw one uniform per replica from ``rng`` and advance the center."""
        self.advance(rng.random(self.center.shape), slot)
