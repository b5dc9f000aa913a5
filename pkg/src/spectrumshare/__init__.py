"""Spectrum-sharing schedulers over Markov-occupied channels.

A secondary user picks up to L of N channels per slot, learns occupancy
only through its own transmission ACKs, and is penalized for colliding
with the primary user.  The package provides the closed-form priority
indices and optimal waiting thresholds for that problem, independent
dynamic-programming and Monte Carlo oracles to verify them, ground-truth
occupancy worlds (independent chains and a moving band), online flip-
probability estimators, and a seeded, reproducible experiment harness
with a CSV-emitting CLI.
"""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .environment import BandWorld, IndependentWorld, PiecewiseLinearSchedule, ramp_schedule
from .episode import RunMetrics, run_episodes
from .estimation import TransitionCounts, advance_window, estimate, record
from .experiment import (
    figure_config,
    oracle_check,
    rows_to_csv,
    run_episode,
    run_experiment,
)
from .indices import (
    BandBelief,
    correlated_index,
    heuristic_index,
    std_normal_cdf,
    update_band_belief,
    whittle_index,
)
from .markov import ChannelParams, flip_prob, flip_prob_or_zero, step
from .scheduling import Beliefs, PolicySpec, update_beliefs
from .single_channel import (
    DpSolution,
    average_reward,
    g_certificate,
    optimal_threshold,
    solve_dp,
)

__version__ = "0.1.0"

__all__ = [
    "BandBelief",
    "BandWorld",
    "Beliefs",
    "ChannelParams",
    "ConfigError",
    "DpSolution",
    "ExperimentConfig",
    "IndependentWorld",
    "PiecewiseLinearSchedule",
    "PolicySpec",
    "RunMetrics",
    "TransitionCounts",
    "advance_window",
    "average_reward",
    "correlated_index",
    "estimate",
    "figure_config",
    "flip_prob",
    "flip_prob_or_zero",
    "g_certificate",
    "heuristic_index",
    "load_config",
    "optimal_threshold",
    "oracle_check",
    "parse_config",
    "ramp_schedule",
    "record",
    "rows_to_csv",
    "run_episode",
    "run_episodes",
    "run_experiment",
    "solve_dp",
    "std_normal_cdf",
    "step",
    "update_band_belief",
    "update_beliefs",
    "whittle_index",
]
