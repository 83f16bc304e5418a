"""Figure rendering for trajectory logs and contact curves.

Rendering is optional (the CSV files stay the primary output); every function
here takes already-computed data and writes a PNG next to it.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .integrator import TrajectoryLog

plt.rcParams["figure.figsize"] = (9.0, 6.5)
plt.rcParams["font.size"] = 9
plt.rcParams["axes.grid"] = True
plt.rcParams["grid.alpha"] = 0.3


def save_trajectory_figure(log: TrajectoryLog, path: str, title: str = "") -> None:
    """Four-panel overview: attitude, body rates, ground track, twist torque."""
    t = np.array([s.time for s in log.samples])
    att = np.array([[s.state.attitude.alpha_v, s.state.attitude.beta_v,
                     s.state.attitude.gamma_v] for s in log.samples])
    omega = np.array([s.state.omega for s in log.samples])
    track = np.array([[s.state.track.x_p, s.state.track.y_p] for s in log.samples])
    center = np.array([[s.state.track.cx, s.state.track.cy] for s in log.samples])
    t_f = np.array([s.torques.t_f_scalar for s in log.samples])
    slip = np.array([s.state.slip.gamma_slip_rate for s in log.samples])
    stokes = np.array([s.state.friction_mode != "stiction" for s in log.samples])

    fig, axes = plt.subplots(2, 2)
    ax = axes[0, 0]
    for i, name in enumerate(("alpha_v", "beta_v", "gamma_v")):
        ax.plot(t, att[:, i], label=name)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("attitude [rad]")
    ax.legend(fontsize=8)

    ax = axes[0, 1]
    for i, name in enumerate(("omega_x", "omega_y", "omega_z")):
        ax.plot(t, omega[:, i], label=name)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("body rates [rad/s]")
    ax.legend(fontsize=8)

    ax = axes[1, 0]
    ax.plot(track[:, 0], track[:, 1], label="contact")
    ax.plot(center[:, 0], center[:, 1], "--", label="center")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(fontsize=8)

    ax = axes[1, 1]
    ax.plot(t, t_f, label="twist torque t_f")
    ax.plot(t, slip, label="slip rate")
    if stokes.any():
        ax.fill_between(t, 0, 1, where=stokes, transform=ax.get_xaxis_transform(),
                        alpha=0.15, color="tab:red", label="stokes regime")
    ax.set_xlabel("t [s]")
    ax.legend(fontsize=8)

    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_contact_curve_figure(curves: dict[float, tuple[np.ndarray, np.ndarray]],
                              path: str) -> None:
    """Contact angle vs inclination, one line per axis ratio (degrees)."""
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    for ratio in sorted(curves):
        beta_v, beta_p = curves[ratio]
        ax.plot(beta_v, beta_p, label=f"ratio {ratio:g}")
    ax.plot([0, 90], [0, 90], ":", color="gray", linewidth=0.8)
    ax.set_xlabel("inclination beta_v [deg]")
    ax.set_ylabel("contact angle beta_p [deg]")
    ax.set_xlim(0, 90)
    ax.set_ylim(0, 90)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
