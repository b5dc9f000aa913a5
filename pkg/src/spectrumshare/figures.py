"""Render aggregated sweep tables as figures.

The CSV table is the primary artifact; these plots are a convenience view
written next to it.  Rendering is headless (Agg backend) and groups rows
by policy: throughput on the left panel, collision rate on the right,
error bars showing the sample standard deviation across runs.
"""

from __future__ import annotations

from collections import OrderedDict

from .experiment import SweepRow

_AXIS_LABELS = {
    "L": "selected channels L",
    "q_max": "maximum flip probability",
    "N": "total channels N",
    "sigma": "band walk step size",
    "none": "",
}


def render_sweep_figure(rows: list[SweepRow], path, title: str | None = None) -> None:
    """Write a two-panel throughput / collision-rate figure to ``path``."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not rows:
        raise ValueError("nothing to plot")
    by_policy: "OrderedDict[str, list[SweepRow]]" = OrderedDict()
    for row in rows:
        by_policy.setdefault(row.policy, []).append(row)
    sweep_var = rows[0].sweep_var

    fig, (ax_tp, ax_cr) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    for policy, policy_rows in by_policy.items():
        xs = [r.sweep_value for r in policy_rows]
        ax_tp.errorbar(
            xs,
            [r.mean_throughput for r in policy_rows],
            yerr=[r.std_throughput for r in policy_rows],
            marker="o",
            capsize=2,
            label=policy,
        )
        ax_cr.errorbar(
            xs,
            [r.mean_collision_rate for r in policy_rows],
            yerr=[r.std_collision_rate for r in policy_rows],
            marker="o",
            capsize=2,
            label=policy,
        )
    xlabel = _AXIS_LABELS.get(sweep_var, sweep_var)
    ax_tp.set_xlabel(xlabel)
    ax_tp.set_ylabel("normalized throughput")
    ax_cr.set_xlabel(xlabel)
    ax_cr.set_ylabel("collision rate")
    ax_tp.grid(alpha=0.3)
    ax_cr.grid(alpha=0.3)
    ax_cr.legend(fontsize=8)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
