"""Energy-decay / step-size traces and coarsening snapshot panels.

Deterministic rendering for diff-able CI artifacts: fixed DPI, fixed color
maps, symmetric [-1, 1] scale for phase-field snapshots.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from tfac_plots.artifacts import RunArtifacts

DPI = 150
SNAPSHOT_CMAP = "RdBu_r"
CONTOUR_LEVELS = np.linspace(-1.0, 1.0, 21)


def plot_energy(run_dir, out_image, log_t: bool = False) -> str:
    """Two-panel figure: E and the variational energy vs t; step sizes vs t."""
    art = RunArtifacts(run_dir)
    rec = art.records()
    t, E, E_alpha, tau = rec["t"], rec["E"], rec["E_alpha"], rec["tau"]

    fig, (ax_e, ax_tau) = plt.subplots(
        2, 1, figsize=(7.0, 6.0), sharex=True, constrained_layout=True
    )
    ax_e.plot(t, E, color="tab:blue", lw=1.5, label="free energy")
    if np.any(np.isfinite(E_alpha)):
        ax_e.plot(t, E_alpha, color="tab:red", lw=1.5, ls="--", label="variational energy")
    ax_e.set_ylabel("energy")
    ax_e.legend(loc="upper right")
    ax_e.grid(True, alpha=0.3)

    ax_tau.plot(t[1:], tau[1:], color="tab:green", lw=1.0, drawstyle="steps-post")
    ax_tau.set_yscale("log")
    ax_tau.set_ylabel("step size")
    ax_tau.set_xlabel("t")
    ax_tau.grid(True, alpha=0.3)
    if log_t:
        positive = t > 0
        if np.any(positive):
            ax_e.set_xscale("log")
            ax_e.set_xlim(t[positive].min(), t[-1])

    fig.savefig(out_image, dpi=DPI)
    plt.close(fig)
    return str(out_image)


def plot_snapshots(run_dir, times, out_image) -> str:
    """Row of filled-contour panels at the requested times, color scale [-1, 1]."""
    art = RunArtifacts(run_dir)
    times = list(times)
    if not times:
        raise ValueError("no snapshot times requested")
    fields = [art.snapshot(t) for t in times]  # raises with available times listed

    fig, axes = plt.subplots(
        1, len(times), figsize=(3.2 * len(times), 3.4), constrained_layout=True
    )
    if len(times) == 1:
        axes = [axes]
    mappable = None
    for ax, (t_actual, L, field) in zip(axes, fields):
        M = field.shape[0]
        x = np.arange(M) * (L / M)
        mappable = ax.contourf(
            x, x, field.T, levels=CONTOUR_LEVELS, cmap=SNAPSHOT_CMAP,
            vmin=-1.0, vmax=1.0, extend="both",
        )
        ax.set_title(f"t = {t_actual:g}")
        ax.set_aspect("equal")
        ax.set_xticks([])
        ax.set_yticks([])
    fig.colorbar(mappable, ax=axes, shrink=0.85, ticks=[-1, -0.5, 0, 0.5, 1])
    fig.savefig(out_image, dpi=DPI)
    plt.close(fig)
    return str(out_image)
