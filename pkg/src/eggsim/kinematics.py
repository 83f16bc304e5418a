"""Rolling-contact kinematics and gimbal motor mixing.

The shell attitude is given by z-x-z Euler angles (alpha_v, beta_v, gamma_v):
the body-to-world rotation is ``R_z(alpha_v) @ R_x(beta_v) @ R_z(gamma_v)``.
Rolling moves the ground contact point; the track rates below are the
classical no-slip relations with an optional twist-slip rate added to the
gamma coupling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    EllipsoidShape,
    _contact_scalars,
    center_height,
    contact_angle_slope,
    contact_point,
    radial_distance_derivative,
    rot_z,
)


@dataclass
class AttitudeState:
    """Shell Euler angles and their time rates.

    Angles in radians, rates in rad/s.  ``beta_v`` is the inclination of the
    long axis against the world vertical and lives in [0, pi].
    """

    alpha_v: float = 0.0
    beta_v: float = 0.0
    gamma_v: float = 0.0
    alpha_v_rate: float = 0.0
    beta_v_rate: float = 0.0
    gamma_v_rate: float = 0.0


@dataclass
class SlipState:
    """Twist-slip rate about the world vertical at the contact point [rad/s]."""

    gamma_slip_rate: float = 0.0


@dataclass
class GroundTrack:
    """Contact-point position and center-of-body position in the world frame."""

    x_p: float = 0.0
    y_p: float = 0.0
    cx: float = 0.0
    cy: float = 0.0
    cz: float = 0.0


def gimbal_angles(mu1: float, mu2: float) -> tuple[float, float]:
    """Servo angles to gimbal angles.

    Same-direction motor motion drives only the outer ring, opposite motion
    only the inner ring; superposition gives

        phi = mu1 + mu2
        psi = mu1 - mu2

    The mixing is linear, so the same map converts rates and accelerations.
    """
    return mu1 + mu2, mu1 - mu2


def servo_angles(phi: float, psi: float) -> tuple[float, float]:
    """Inverse mixing: (mu1, mu2) = ((phi + psi)/2, (phi - psi)/2)."""
    return 0.5 * (phi + psi), 0.5 * (phi - psi)


def rolling_rates(att: AttitudeState, slip: SlipState,
                  shape: EllipsoidShape) -> tuple[float, float, float]:
    """No-slip rolling rates evaluated at the current contact point.

    Returns:
        (gamma_v_rate, x_p_rate, y_p_rate) with

            gamma_v_rate = alpha_v_rate * cos(beta_v) + gamma_slip_rate
            x_p_rate =  |r(beta_p)| cos(gamma_v) beta_v_rate + r_alpha(beta_p) alpha_v_rate sin(gamma_v)
            y_p_rate = -|r(beta_p)| sin(gamma_v) beta_v_rate + r_alpha(beta_p) alpha_v_rate cos(gamma_v)
    """
    _, _, dist, ring = _contact_scalars(att.beta_v, shape)
    sg, cg = math.sin(att.gamma_v), math.cos(att.gamma_v)
    gamma_v_rate = att.alpha_v_rate * math.cos(att.beta_v) + slip.gamma_slip_rate
    x_p_rate = dist * cg * att.beta_v_rate + ring * att.alpha_v_rate * sg
    y_p_rate = -dist * sg * att.beta_v_rate + ring * att.alpha_v_rate * cg
    return gamma_v_rate, x_p_rate, y_p_rate


def contact_center_offset(beta_v: float, gamma_v: float,
                          shape: EllipsoidShape) -> np.ndarray:
    """World vector from the contact point to the shell center.

    The center-to-contact line is tilted by ``chi = beta_v - beta_p`` from the
    vertical, so the offset is ``|r(beta_p)| * R_z(gamma_v) @ (0, sin chi, cos chi)``.
    Its vertical component is exactly the support height of the shell.
    """
    cp = contact_point(beta_v, shape)
    chi = beta_v - cp.beta_p
    u = np.array([0.0, math.sin(chi), math.cos(chi)])
    return cp.radial_distance * (rot_z(gamma_v) @ u)


def center_velocity(att: AttitudeState, contact_rates: tuple[float, float],
                    shape: EllipsoidShape) -> np.ndarray:
    """World-frame velocity of the shell center.

    Contact-point velocity plus the analytic time derivative of
    :func:`contact_center_offset`, chained through gamma_v and
    beta_p(beta_v).  The vertical component therefore equals
    d/dt of the support height.

    Args:
        att: attitude with rates populated.
        contact_rates: (x_p_rate, y_p_rate) from :func:`rolling_rates`.
        shape: shell geometry.
    """
    cp = contact_point(att.beta_v, shape)
    chi = att.beta_v - cp.beta_p
    s = cp.radial_distance

    beta_p_rate = contact_angle_slope(att.beta_v, shape) * att.beta_v_rate
    chi_rate = att.beta_v_rate - beta_p_rate
    s_rate = radial_distance_derivative(cp.beta_p, shape) * beta_p_rate

    u = np.array([0.0, math.sin(chi), math.cos(chi)])
    u_rate = chi_rate * np.array([0.0, math.cos(chi), -math.sin(chi)])

    rz = rot_z(att.gamma_v)
    planar = rz @ (s_rate * u + s * u_rate)
    spin = s * (rz @ u)
    # d/dt R_z(g) = g_rate * G_z R_z(g); G_z v = (-v_y, v_x, 0)
    spin = att.gamma_v_rate * np.array([-spin[1], spin[0], 0.0])

    x_p_rate, y_p_rate = contact_rates
    return np.array([x_p_rate, y_p_rate, 0.0]) + planar + spin


def center_position(track_x: float, track_y: float, beta_v: float,
                    gamma_v: float, shape: EllipsoidShape) -> tuple[float, float, float]:
    """World position of the shell center above the current contact point."""
    off = contact_center_offset(beta_v, gamma_v, shape)
    return track_x + off[0], track_y + off[1], off[2]


def height_rate(beta_v: float, beta_v_rate: float, shape: EllipsoidShape) -> float:
    """d/dt of the center height; analytic derivative of the support distance."""
    s, c = math.sin(beta_v), math.cos(beta_v)
    h = center_height(beta_v, shape)
    return (shape.r2 ** 2 - shape.r1 ** 2) * s * c / h * beta_v_rate
