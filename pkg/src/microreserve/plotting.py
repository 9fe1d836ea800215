"""Figure rendering for report output.

Figures are written straight to files with the non-interactive Agg
backend; nothing here opens a window.
"""

from __future__ import annotations

import numpy as np

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .trend import TrendSpec

__all__ = ["plot_reserve_distribution", "plot_trend_intensity"]


def plot_reserve_distribution(paths, out_path, mixture=None, bins: int = 80):
    """Histogram of simulated totals, optionally with a mixture overlay."""
    paths = np.asarray(paths, dtype=float)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.hist(paths, bins=bins, density=True, color="#4878a8",
            edgecolor="white", linewidth=0.3)
    if mixture is not None:
        grid = np.linspace(paths.min(), paths.max(), 400)
        ax.plot(grid, mixture.pdf(grid), color="#c04040", linewidth=1.5,
                label="mixture fit")
        ax.legend(frameon=False)
    ax.set_xlabel("discounted outstanding payments")
    ax.set_ylabel("density")
    ax.set_title("Simulated reserve distribution")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def plot_trend_intensity(trend: TrendSpec, horizon_years: float, out_path,
                         n_points: int = 400):
    """Occurrence intensity per year over the horizon."""
    t = np.linspace(1e-6, horizon_years, n_points)
    lam = np.asarray(trend.intensity_years(t))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(t, lam, color="#4878a8")
    ax.set_xlabel("time (years)")
    ax.set_ylabel("intensity (per year)")
    ax.set_title("Occurrence trend")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
