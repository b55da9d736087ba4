"""Static figure rendering for curve reports.

The CLI's report path can save a PNG next to the delimited output: rate over
time on top, cumulative energy underneath, with the switch-off and
extinction times marked.  Stochastic reports add the Monte-Carlo mean and
its 4-sigma band.  Everything is rendered headlessly to a file; there is no
interactive display.
"""

from typing import Optional, Sequence

import numpy as np

__all__ = ["render_curve_figure"]


def render_curve_figure(
    path: str,
    times: Sequence[float],
    rates: Sequence[float],
    cumulative: Sequence[float],
    t1: float,
    t2: float,
    demand: Optional[float] = None,
    mean: Optional[Sequence[float]] = None,
    stderr: Optional[Sequence[float]] = None,
) -> str:
    """Render the curve report to `path` (format from its extension)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    times = np.asarray(times, dtype=float)
    fig, (ax_rate, ax_energy) = plt.subplots(
        2, 1, figsize=(7.0, 5.6), sharex=True, constrained_layout=True
    )

    ax_rate.plot(times, rates, color="#1f77b4", lw=1.6, label="supply rate")
    if mean is not None:
        mean = np.asarray(mean, dtype=float)
        ax_rate.plot(times, mean, color="#d62728", lw=1.0, label="Monte-Carlo mean")
        if stderr is not None:
            half = 4.0 * np.asarray(stderr, dtype=float)
            ax_rate.fill_between(
                times, mean - half, mean + half,
                color="#d62728", alpha=0.18, lw=0, label="mean +/- 4 stderr",
            )
    ax_rate.set_ylabel("rate (W)")
    ax_rate.legend(loc="best", fontsize=8, frameon=False)

    ax_energy.plot(times, cumulative, color="#2ca02c", lw=1.6, label="delivered energy")
    if demand is not None:
        ax_energy.axhline(demand, color="0.4", lw=0.8, ls=":", label="demand")
    ax_energy.set_xlabel("time (s)")
    ax_energy.set_ylabel("energy (J)")
    ax_energy.legend(loc="best", fontsize=8, frameon=False)

    for ax in (ax_rate, ax_energy):
        ax.axvline(t1, color="0.55", lw=0.8, ls="--")
        ax.axvline(t2, color="0.55", lw=0.8, ls="--")
        ax.grid(alpha=0.25, lw=0.5)
    ax_rate.set_title(f"switch-off at t1 = {t1:.6g} s, extinct at t2 = {t2:.6g} s", fontsize=10)

    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
