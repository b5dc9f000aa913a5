"""Closed-form per-channel scheduling indices.

Three priority indices share one convention: a channel whose last
observation was "free" gets index +infinity (it should simply be used),
and a believed-occupied channel gets a finite nonnegative score that grows
with the age of the observation.

* The exact index prices channel access at the cost that makes probing and
  idling equally attractive in the current (observation, age) state.
* The packet-count index scores a channel by the expected number of packets
  deliverable before the next collision.
* The band index handles a primary user occupying a moving contiguous
  block: it combines the probability that a channel sits outside the
  estimated block with a squared-distance proxy for how long it will stay
  outside.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping

import numpy as np
from scipy.special import ndtr

from .markov import ChannelParams

__all__ = [
    "BandBelief",
    "std_normal_cdf",
    "whittle_index",
    "whittle_index_values",
    "heuristic_index",
    "heuristic_index_values",
    "correlated_index",
    "correlated_index_values",
    "update_band_belief",
]


def std_normal_cdf(x):
    """Standard normal CDF, elementwise on scalars or arrays.

    Backed by the erf-based ``scipy.special.ndtr``, accurate to well below
    1e-7 absolute error everywhere.
    """
    return ndtr(x)


def whittle_index_values(last_observed, age, q):
    """Exact index for arrays of belief states.

    ``last_observed`` (0/1 or bool), ``age`` (integers >= 1) and ``q``
    broadcast together; returns float64 with +inf where the last
    observation was "free".  At age 1 the index is exactly 0: a channel
    just seen occupied is worth probing only at zero cost.
    """
    age = np.asarray(age)
    base = 1.0 - 2.0 * np.asarray(q, dtype=np.float64)
    # exp((age-1) * log) is cheaper than power and still exactly 1 at age 1,
    # which keeps the index exactly 0 there.
    p_prev = np.exp((age - 1) * np.log(base))
    f_prev = 0.5 * (1.0 - p_prev)
    f_cur = np.where(age == 1, q, 0.5 * (1.0 - p_prev * base))
    gap = f_prev - f_cur
    num = age * gap + f_cur
    den = (age - 1) * gap + f_cur + q
    return np.where(np.asarray(last_observed) == 0, np.inf, num / den)


def whittle_index(last_observed: int, age: int, params: ChannelParams) -> float:
    """Exact index of a single belief state (see :func:`whittle_index_values`)."""
    if age < 1:
        raise ValueError(f"age must be >= 1, got {age}")
    return float(whittle_index_values(last_observed, age, params.q))


def heuristic_index_values(last_observed, age, q):
    """Expected packets before the next collision, for arrays of belief states.

    For a believed-occupied channel of age ``delta`` this is
    flip_prob(delta) / q: the chance the channel has freed up, times the
    expected length of a free period.  +inf where the channel was last
    seen free.
    """
    age = np.asarray(age)
    qf = np.asarray(q, dtype=np.float64)
    base = 1.0 - 2.0 * qf
    f_cur = np.where(age == 1, qf, 0.5 * (1.0 - np.exp(age * np.log(base))))
    return np.where(np.asarray(last_observed) == 0, np.inf, f_cur / qf)


def heuristic_index(last_observed: int, age: int, params: ChannelParams) -> float:
    """Expected packets before the next collision for one belief state."""
    if age < 1:
        raise ValueError(f"age must be >= 1, got {age}")
    return float(heuristic_index_values(last_observed, age, params.q))


@dataclass(frozen=True)
class BandBelief:
    """The scheduler's running estimate of a moving occupancy band.

    ``center_estimate`` tracks the band center in 1-based channel units and
    stays clamped to [1, num_channels]; ``memory`` is the exponential
    blending weight of the center update (1 = never move); ``mean_age`` is
    the average age of the occupancy observations feeding the estimate.
    """

    center_estimate: float
    memory: float
    mean_age: float
    num_channels: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.memory <= 1.0:
            raise ValueError(f"memory must lie in [0, 1], got {self.memory}")
        if self.mean_age < 1.0:
            raise ValueError(f"mean_age must be >= 1, got {self.mean_age}")
        if not 1.0 <= self.center_estimate <= self.num_channels:
            raise ValueError(
                f"center estimate {self.center_estimate} outside [1, {self.num_channels}]"
            )


def correlated_index_values(channel_ids, last_observed, center_estimate, mean_age, band_width):
    """Band index for arrays of channels (ids are 1-based).

    free-probability x squared-distance: the probability that the channel
    lies outside a band of width ``band_width`` centered at a normal
    estimate with std sqrt(mean_age), scaled by the squared distance to the
    estimated center (a first-passage-time proxy for how long the channel
    stays free).  +inf where the channel was last seen free.
    """
    ids = np.asarray(channel_ids, dtype=np.float64)
    half = band_width / 2.0
    scale = np.sqrt(mean_age)
    gap = ids - center_estimate
    inside = ndtr((gap + half) / scale) - ndtr((gap - half) / scale)
    return np.where(np.asarray(last_observed) == 0, np.inf, (1.0 - inside) * gap * gap)


def correlated_index(
    channel: int,
    observed_occupied: bool,
    band_belief: BandBelief,
    band_width: int,
) -> float:
    """Band index of a single channel given the current band belief."""
    if band_width < 1:
        raise ValueError(f"band width must be >= 1, got {band_width}")
    return float(
        correlated_index_values(
            channel,
            1 if observed_occupied else 0,
            band_belief.center_estimate,
            band_belief.mean_age,
            band_width,
        )
    )


def update_band_belief(
    band_belief: BandBelief,
    selected_channels: Iterable[int],
    observations: Mapping[int, int],
    all_ages: Iterable[int],
    age_over_selected: bool = False,
) -> BandBelief:
    """Fold one slot's observations into the band belief.

    Channel ids are 1-based positions, the same units as the band center.
    If any selected channel was observed occupied, the center estimate
    blends toward the mean position of those channels (weight
    ``1 - memory``) and is clamped back into [1, num_channels]; with no
    occupied observation it holds its last value.  ``mean_age`` is
    recomputed from ``all_ages`` (every channel's current age, listed for
    positions 1..N), or, when ``age_over_selected`` is set, from the
    selected channels' ages only.
    """
    selected = sorted(selected_channels)
    if set(observations) != set(selected):
        raise ValueError("observations must cover exactly the selected channels")
    ages = np.asarray(list(all_ages), dtype=np.float64)
    if age_over_selected and selected:
        mean_age = float(np.mean(ages[[ch - 1 for ch in selected]]))
    else:
        mean_age = float(np.mean(ages))

    occupied = [ch for ch in selected if observations[ch] == 1]
    center = band_belief.center_estimate
    if occupied:
        target = float(np.mean(occupied))
        center = band_belief.memory * center + (1.0 - band_belief.memory) * target
        center = min(max(center, 1.0), float(band_belief.num_channels))
    return replace(band_belief, center_estimate=center, mean_age=max(mean_age, 1.0))
