"""Experiment orchestration: sweeps, aggregation, CSV output, oracle checks.

A sweep expands into independent cells, one per (sweep value, policy)
pair.  Every cell runs ``runs`` episodes whose seeds are
``base_seed + run_index``, so results are a pure function of the config
and never depend on execution order or on how many worker processes the
pool uses (override the worker count with the ``SPECTRUMSHARE_WORKERS``
environment variable).

The aggregated table serializes to CSV with a fixed header and floats
printed to 9 significant digits, making equal configs byte-comparable.
"""

from __future__ import annotations

import concurrent.futures
import io
import logging
import math
import os
from dataclasses import dataclass

import numpy as np

from .config import ConfigError, ExperimentConfig
from .episode import RunMetrics, run_episodes
from .indices import whittle_index
from .markov import ChannelParams
from .scheduling import PolicySpec
from .single_channel import average_reward, best_threshold_policy, solve_dp

__all__ = [
    "SweepRow",
    "OracleReport",
    "run_episode",
    "run_experiment",
    "rows_to_csv",
    "oracle_check",
    "oracle_report_csv",
    "figure_config",
    "FIGURE_NUMBERS",
]

log = logging.getLogger(__name__)

WORKERS_ENV = "SPECTRUMSHARE_WORKERS"

CSV_COLUMNS = (
    "sweep_var",
    "sweep_value",
    "policy",
    "runs",
    "mean_throughput",
    "std_throughput",
    "mean_collision_rate",
    "std_collision_rate",
    "mean_collision_per_attempt",
    "mean_objective",
    "mean_attempt_fraction",
)


@dataclass(frozen=True)
class SweepRow:
    """Aggregated metrics of one (sweep value, policy) cell."""

    sweep_var: str
    sweep_value: float
    policy: str
    runs: int
    mean_throughput: float
    std_throughput: float
    mean_collision_rate: float
    std_collision_rate: float
    mean_collision_per_attempt: float
    mean_objective: float
    mean_attempt_fraction: float


def run_episode(config: ExperimentConfig, policy: PolicySpec, seed: int) -> RunMetrics:
    """Run a single seeded episode of ``policy`` under ``config``."""
    config.validate()
    return run_episodes(config.cell(None), policy, [seed])[0]


def _mean_std(values: np.ndarray, runs: int) -> tuple[float, float]:
    mean = float(values.mean())
    std = float(values.std(ddof=1)) if runs > 1 else 0.0
    return mean, std


def _run_cell(args) -> SweepRow:
    sweep_var, sweep_value, cell_config, policy = args
    seeds = [cell_config.base_seed + r for r in range(cell_config.runs)]
    metrics = run_episodes(cell_config, policy, seeds)
    throughput = np.array([m.normalized_throughput for m in metrics])
    coll_rate = np.array([m.collision_rate for m in metrics])
    mean_tp, std_tp = _mean_std(throughput, cell_config.runs)
    mean_cr, std_cr = _mean_std(coll_rate, cell_config.runs)
    return SweepRow(
        sweep_var=sweep_var,
        sweep_value=sweep_value,
        policy=policy.label,
        runs=cell_config.runs,
        mean_throughput=mean_tp,
        std_throughput=std_tp,
        mean_collision_rate=mean_cr,
        std_collision_rate=std_cr,
        mean_collision_per_attempt=float(
            np.mean([m.collision_per_attempt for m in metrics])
        ),
        mean_objective=float(np.mean([m.objective for m in metrics])),
        mean_attempt_fraction=float(np.mean([m.attempt_fraction for m in metrics])),
    )


def _worker_count(num_cells: int) -> int:
    override = os.environ.get(WORKERS_ENV)
    if override is not None:
        try:
            workers = int(override)
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV} must be an integer") from exc
        if workers < 1:
            raise ConfigError(f"{WORKERS_ENV} must be >= 1")
    else:
        workers = os.cpu_count() or 1
    return max(1, min(workers, num_cells))


def run_experiment(config: ExperimentConfig) -> list[SweepRow]:
    """Expand the sweep, run every cell, and aggregate.

    Rows come out in deterministic order: sweep values as configured,
    policies as configured within each value.
    """
    config.validate()
    if config.sweep_variable is None:
        sweep_var = "none"
        points: list[tuple[float, ExperimentConfig]] = [(0, config.cell(None))]
    else:
        sweep_var = config.sweep_variable
        points = [(value, config.cell(value)) for value in config.sweep_values]

    cells = [
        (sweep_var, value, cell_config, policy)
        for value, cell_config in points
        for policy in config.policies
    ]
    workers = _worker_count(len(cells))
    log.info("running %d cells on %d worker(s)", len(cells), workers)
    if workers == 1:
        return [_run_cell(cell) for cell in cells]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_cell, cells))


def _fmt(value: float) -> str:
    return format(value, ".9g")


def _fmt_sweep_value(sweep_var: str, value: float) -> str:
    if sweep_var in ("L", "N", "none"):
        return str(int(value))
    return _fmt(float(value))


def rows_to_csv(rows: list[SweepRow]) -> str:
    """Serialize aggregated rows with the fixed schema and float format."""
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        out.write(
            ",".join(
                (
                    row.sweep_var,
                    _fmt_sweep_value(row.sweep_var, row.sweep_value),
                    row.policy,
                    str(row.runs),
                    _fmt(row.mean_throughput),
                    _fmt(row.std_throughput),
                    _fmt(row.mean_collision_rate),
                    _fmt(row.std_collision_rate),
                    _fmt(row.mean_collision_per_attempt),
                    _fmt(row.mean_objective),
                    _fmt(row.mean_attempt_fraction),
                )
            )
            + "\n"
        )
    return out.getvalue()


DEFAULT_ORACLE_QS = (0.05, 0.15, 0.25, 0.35, 0.45)
DEFAULT_ORACLE_COSTS = tuple(round(0.1 * k, 1) for k in range(1, 10))


@dataclass(frozen=True)
class OracleRow:
    q: float
    cost: float
    h_closed_form: float
    h_dp: float
    gain_closed_form: float
    gain_dp: float
    abs_error: float


@dataclass(frozen=True)
class OracleReport:
    """Closed-form-vs-DP comparison plus index sanity checks."""

    rows: list[OracleRow]
    max_gain_error: float
    max_indifference_residual: float
    violations: list[str]

    @property
    def passed(self) -> bool:
        return not self.violations


def oracle_check(
    qs=DEFAULT_ORACLE_QS,
    costs=DEFAULT_ORACLE_COSTS,
    delta_max: int = 200,
    tolerance: float = 1e-10,
    gain_tol: float = 1e-6,
    indifference_span: tuple[int, int] = (2, 50),
    indifference_tol: float = 1e-10,
) -> OracleReport:
    """Cross-check the closed forms against the independent DP solver.

    For every (q, cost) grid point the closed-form best threshold and gain
    must match relative value iteration within ``gain_tol`` (thresholds may
    differ where two thresholds are exactly indifferent).  On top of that,
    the index must be exactly 0 at age 1 and make consecutive thresholds
    indifferent to within ``indifference_tol``.
    """
    rows: list[OracleRow] = []
    violations: list[str] = []
    max_gain_err = 0.0
    for q in qs:
        params = ChannelParams(q)
        for cost in costs:
            closed = best_threshold_policy(params, cost)
            dp = solve_dp(params, cost, delta_max=delta_max, tolerance=tolerance)
            gain_err = abs(closed.gain - dp.gain)
            max_gain_err = max(max_gain_err, gain_err)
            rows.append(
                OracleRow(
                    q=q,
                    cost=cost,
                    h_closed_form=closed.threshold,
                    h_dp=dp.threshold,
                    gain_closed_form=closed.gain,
                    gain_dp=dp.gain,
                    abs_error=gain_err,
                )
            )
            if gain_err > gain_tol:
                violations.append(
                    f"gain mismatch at q={q}, cost={cost}: |{closed.gain} - {dp.gain}|"
                )
            if not _thresholds_agree(params, cost, closed, dp.threshold, gain_tol):
                violations.append(
                    f"threshold mismatch at q={q}, cost={cost}: "
                    f"closed={closed.threshold}, dp={dp.threshold}"
                )

    max_resid = 0.0
    lo, hi = indifference_span
    for q in qs:
        params = ChannelParams(q)
        w11 = whittle_index(1, 1, params)
        if w11 != 0.0:
            violations.append(f"index at age 1 is {w11!r} for q={q}, expected exactly 0")
        for h in range(lo, hi + 1):
            w = whittle_index(1, h, params)
            resid = abs(average_reward(params, h - 1, w) - average_reward(params, h, w))
            max_resid = max(max_resid, resid)
            if resid > indifference_tol:
                violations.append(
                    f"indifference residual {resid:g} at q={q}, H={h} "
                    f"exceeds {indifference_tol:g}"
                )
    return OracleReport(
        rows=rows,
        max_gain_error=max_gain_err,
        max_indifference_residual=max_resid,
        violations=violations,
    )


def _thresholds_agree(params, cost, closed, h_dp, gain_tol) -> bool:
    if math.isinf(closed.threshold) and math.isinf(h_dp):
        return True
    if math.isinf(closed.threshold) or math.isinf(h_dp):
        # Only acceptable at an exact profitability boundary.
        return abs(closed.gain) <= gain_tol
    if closed.threshold == h_dp:
        return True
    # Different thresholds are fine when both achieve the optimal gain.
    return abs(average_reward(params, int(h_dp), cost) - closed.gain) <= 1e-9


def oracle_report_csv(report: OracleReport) -> str:
    """Serialize the q x cost comparison table."""
    out = io.StringIO()
    out.write("q,D,H_closed_form,H_dp,gain_closed_form,gain_dp,abs_error\n")
    for row in report.rows:
        out.write(
            ",".join(
                (
                    _fmt(row.q),
                    _fmt(row.cost),
                    "inf" if math.isinf(row.h_closed_form) else str(int(row.h_closed_form)),
                    "inf" if math.isinf(row.h_dp) else str(int(row.h_dp)),
                    _fmt(row.gain_closed_form),
                    _fmt(row.gain_dp),
                    _fmt(row.abs_error),
                )
            )
            + "\n"
        )
    return out.getvalue()


FIGURE_NUMBERS = tuple(range(3, 10))

_INDEPENDENT_POLICIES = (
    PolicySpec("pure_random"),
    PolicySpec("check_empty_random"),
    PolicySpec("whittle"),
    PolicySpec("heuristic"),
)
_BAND_POLICIES = (
    PolicySpec("pure_random"),
    PolicySpec("check_empty_random"),
    PolicySpec("correlated_heuristic"),
)
_L_SWEEP = (1, 2, 3, 4, 6, 8)


def figure_config(number: int) -> ExperimentConfig:
    """Preset experiment behind each numbered report.

    3: independent channels, throughput/collisions vs number of selected
       channels L; 4: vs the upper flip probability; 5: vs the channel
       count at a fixed 1/4 selection ratio; 6: the L sweep with online
       estimation (stationary statistics); 7: the L sweep with windowed
       estimation under drifting statistics; 8: moving-band world vs L;
       9: moving-band world vs the band's walk step size.
    """
    base = ExperimentConfig(
        policies=_INDEPENDENT_POLICIES,
        sweep_variable="L",
        sweep_values=_L_SWEEP,
    )
    if number == 3:
        return base
    if number == 4:
        return ExperimentConfig(
            policies=_INDEPENDENT_POLICIES,
            sweep_variable="q_max",
            sweep_values=(0.2, 0.3, 0.4, 0.5),
        )
    if number == 5:
        return ExperimentConfig(
            policies=_INDEPENDENT_POLICIES,
            sweep_variable="N",
            sweep_values=(8, 16, 32, 64),
            l_fraction=0.25,
        )
    if number == 6:
        return ExperimentConfig(
            policies=_INDEPENDENT_POLICIES
            + (PolicySpec("whittle", "mle"), PolicySpec("heuristic", "mle")),
            sweep_variable="L",
            sweep_values=_L_SWEEP,
        )
    if number == 7:
        return ExperimentConfig(
            policies=_INDEPENDENT_POLICIES
            + (PolicySpec("whittle", "ewmle"), PolicySpec("heuristic", "ewmle")),
            sweep_variable="L",
            sweep_values=_L_SWEEP,
            nonstationary=True,
        )
    if number == 8:
        return ExperimentConfig(
            world="band",
            n=16,
            band_width=12,
            sigma=1.0,
            policies=_BAND_POLICIES,
            sweep_variable="L",
            sweep_values=(1, 2, 3, 4),
        )
    if number == 9:
        return ExperimentConfig(
            world="band",
            n=16,
            l=4,
            band_width=12,
            policies=_BAND_POLICIES,
            sweep_variable="sigma",
            sweep_values=(0.5, 1.0, 1.5, 2.0),
        )
    raise ConfigError(f"no preset for figure {number}; choose from {FIGURE_NUMBERS}")
