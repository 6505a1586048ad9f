"""Render run artifacts as PNG figures.

Two figures per run, written next to the delimited outputs:

  trajectory.png  agent paths in the plane, target circles, centroid track
  metrics.png     phase order magnitudes, angular velocities, radius error,
                  and the composite (Lyapunov) value over time

Rendering is headless (Agg); nothing here opens a window.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .controllers import ControllerConfig, per_agent_targets
from .sim import ConvergenceReport, Trajectory

_CYCLE = plt.rcParams["axes.prop_cycle"].by_key()["color"]


def _agent_color(k: int) -> str:
    return _CYCLE[k % len(_CYCLE)]


def _draw_circle(ax, center: complex, radius: float) -> None:
    arc = np.exp(1j * np.linspace(0.0, 2.0 * np.pi, 256))
    ring = center + radius * arc
    ax.plot(ring.real, ring.imag, ls="--", lw=0.9, color="0.45", zorder=1)
    ax.plot([center.real], [center.imag], marker="+", ms=9, color="0.3",
            zorder=1)


def plot_trajectory(traj: Trajectory, config: ControllerConfig,
                    ax=None, title: str | None = None):
    """Planar paths with start/end markers and the target circles."""
    if ax is None:
        _, ax = plt.subplots(figsize=(6.4, 6.0))
    n = traj.n
    rho_k, omd_k, center_k = per_agent_targets(config, n)

    if center_k is not None:
        seen = set()
        for k in range(n):
            key = (complex(center_k[k]), float(rho_k[k]))
            if key not in seen:
                seen.add(key)
                _draw_circle(ax, key[0], key[1])

    for k in range(n):
        path = traj.positions[:, k]
        color = _agent_color(k)
        ax.plot(path.real, path.imag, lw=0.8, color=color, alpha=0.75)
        ax.plot(path.real[0], path.imag[0], marker="o", mfc="none",
                mec=color, ms=5)
        ax.plot(path.real[-1], path.imag[-1], marker="o", color=color, ms=5)
        # Final heading as a short arrow so the rotation sense is visible.
        tip = path[-1] + 1.2 * np.exp(1j * traj.headings[-1, k])
        ax.annotate("", xy=(tip.real, tip.imag),
                    xytext=(path.real[-1], path.imag[-1]),
                    arrowprops=dict(arrowstyle="->", color=color, lw=1.0))

    cen = traj.centroid
    ax.plot(cen.real, cen.imag, ls=":", lw=1.2, color="k", alpha=0.8,
            label="centroid")
    ax.plot(cen.real[-1], cen.imag[-1], marker="s", color="k", ms=5)

    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.legend(loc="best", fontsize=8)
    if title:
        ax.set_title(title)
    return ax


def plot_metrics(traj: Trajectory, config: ControllerConfig,
                 report: ConvergenceReport | None = None, fig=None,
                 title: str | None = None):
    """2x2 panel: order magnitudes, omega, radius error, composite value."""
    if fig is None:
        fig, axes = plt.subplots(2, 2, figsize=(9.6, 7.0))
    else:
        axes = fig.subplots(2, 2)
    t = traj.times
    (ax_p, ax_w), (ax_r, ax_v) = axes

    for i, m in enumerate(traj.orders):
        ax_p.plot(t, traj.order_magnitudes[:, i], lw=1.1,
                  label=f"|p_{{{m}θ}}|")
    ax_p.set_ylim(-0.05, 1.05)
    ax_p.set_ylabel("phase order magnitude")
    ax_p.legend(loc="best", fontsize=8)

    n = traj.n
    _, omd_k, _ = per_agent_targets(config, n)
    for k in range(n):
        ax_w.plot(t, traj.omegas[:, k], lw=0.8, color=_agent_color(k))
    for w in np.unique(omd_k):
        ax_w.axhline(w, ls="--", lw=0.9, color="0.4")
    ax_w.set_ylabel("angular velocity [rad/s]")

    if np.isnan(traj.radius_err).all():
        ax_r.text(0.5, 0.5, "no target circle", ha="center", va="center",
                  transform=ax_r.transAxes, color="0.5")
    else:
        for k in range(n):
            ax_r.plot(t, np.abs(traj.radius_err[:, k]), lw=0.8,
                      color=_agent_color(k), alpha=0.7)
        ax_r.set_yscale("log")
    ax_r.set_ylabel("|radius error| [m]")
    ax_r.set_xlabel("t [s]")

    v = traj.lyapunov
    ax_v.plot(t, v, lw=1.1, color="tab:red")
    if np.nanmin(v) > 0:
        ax_v.set_yscale("log")
    label = "composite value"
    if report is not None:
        label += f" ({report.lyapunov_violations} violations)"
    ax_v.set_ylabel(label)
    ax_v.set_xlabel("t [s]")

    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return fig


def render_figures(traj: Trajectory, config: ControllerConfig,
                   report: ConvergenceReport | None, out_dir: str | Path,
                   name: str = "") -> list:
    """Write trajectory.png and metrics.png into out_dir; return the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    fig, ax = plt.subplots(figsize=(6.4, 6.0))
    plot_trajectory(traj, config, ax=ax, title=name or None)
    fig.tight_layout()
    path = out_dir / "trajectory.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig = plt.figure(figsize=(9.6, 7.0))
    plot_metrics(traj, config, report=report, fig=fig, title=name or None)
    path = out_dir / "metrics.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    return written
