"""Figure rendering for the report path.

Figures are rendered to files next to the delimited output; the CSV stays
the machine contract and these are the human view of the same data.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .analysis import PdeltaCurve, SweepRow
from .simulator import Trajectory


def plot_trajectory(traj: Trajectory, path: str | Path,
                    title: str = "") -> Path:
    """Six-panel transient record: angle, frequency, powers, voltage, current."""
    path = Path(path)
    fig, axes = plt.subplots(3, 2, figsize=(10, 8), sharex=True)
    deg = np.degrees(traj.delta)

    axes[0, 0].plot(traj.t, deg)
    axes[0, 0].set_ylabel("angle difference (deg)")
    axes[0, 1].plot(traj.t, traj.omega)
    axes[0, 1].set_ylabel("frequency (pu)")
    axes[1, 0].plot(traj.t, traj.p_g, label="p_g")
    axes[1, 0].plot(traj.t, traj.p_virt, alpha=0.6, label="p_virt")
    axes[1, 0].set_ylabel("active power (pu)")
    axes[1, 0].legend(loc="best", fontsize=8)
    axes[1, 1].plot(traj.t, traj.q_g)
    axes[1, 1].set_ylabel("reactive power (pu)")
    axes[2, 0].plot(traj.t, traj.v_g_mag)
    axes[2, 0].set_ylabel("PCC voltage (pu)")
    axes[2, 0].set_xlabel("t (s)")
    axes[2, 1].plot(traj.t, traj.i_mag)
    axes[2, 1].set_ylabel("current (pu)")
    axes[2, 1].set_xlabel("t (s)")
    for ax in axes.flat:
        ax.grid(True, alpha=0.3)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_pdelta(curves: list[PdeltaCurve], path: str | Path) -> Path:
    """Power-angle characteristics, one line per mode."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for curve in curves:
        ax.plot(np.degrees(curve.delta_grid), curve.p, label=curve.mode)
        if curve.delta_a is not None:
            ax.axvline(math.degrees(curve.delta_a), color="grey",
                       linestyle=":", alpha=0.5)
    ax.set_xlabel("angle (deg)")
    ax.set_ylabel("active power (pu)")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_sweep(rows: list[SweepRow], axis: str, path: str | Path) -> Path:
    """Bar chart of clearing times over the swept values."""
    path = Path(path)
    labels = [str(r.value) for r in rows]
    ccts = [r.result.cct * 1e3 if r.result is not None else 0.0 for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    bars = ax.bar(labels, ccts)
    for bar, row in zip(bars, rows):
        if row.error is not None:
            bar.set_color("tab:red")
    ax.set_xlabel(axis)
    ax.set_ylabel("CCT (ms)")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
