"""Rotation conventions and contact geometry of the prolate ellipsoid shell.

Conventions used throughout the package:

* Vectors are numpy arrays of shape (3,), rotation matrices numpy arrays of
  shape (3, 3).
* The shell is a prolate ellipsoid of revolution.  Its symmetry (long) axis
  is the local z' axis, ``r1`` is the long semi-axis, ``r2`` the equatorial
  one.
* Meridian angles ``beta`` are measured from the long axis, so the radial
  distance satisfies ``|r(0)| = r1`` (pole) and ``|r(pi/2)| = r2`` (equator).
* ``beta_v`` is the inclination of the long axis against the world vertical;
  ``beta_p`` the angle from the long axis to the center-to-contact direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryDomainError

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.remainder(a, TWO_PI)
    if w <= -math.pi:
        w += TWO_PI
    return w


def rot_x(a: float) -> np.ndarray:
    """Active rotation by angle ``a`` about the x axis."""
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0],
                     [0.0, c, -s],
                     [0.0, s, c]])


def rot_z(b: float) -> np.ndarray:
    """Active rotation by angle ``b`` about the z axis."""
    c, s = math.cos(b), math.sin(b)
    return np.array([[c, -s, 0.0],
                     [s, c, 0.0],
                     [0.0, 0.0, 1.0]])


def local_from_global(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """z-x-z Euler composition ``R_z(alpha) @ R_x(beta) @ R_z(gamma)``.

    This single matrix carries both attitude roles in the package: used on
    shell-frame coordinates it produces world coordinates of the tilted body
    (body-to-world attitude); its inverse is :func:`global_from_local`.
    """
    return rot_z(alpha) @ rot_x(beta) @ rot_z(gamma)


def global_from_local(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Inverse of :func:`local_from_global`: ``R_z(-gamma) @ R_x(-beta) @ R_z(-alpha)``."""
    return rot_z(-gamma) @ rot_x(-beta) @ rot_z(-alpha)


@dataclass(frozen=True)
class EllipsoidShape:
    """Semi-axes of the shell.

    Attributes:
        r1: long semi-axis along the symmetry (z') axis [m]
        r2: short (equatorial) semi-axis [m]
    """

    r1: float
    r2: float

    def __post_init__(self):
        if not (self.r1 >= self.r2 > 0.0):
            raise ValueError(f"invalid shape: need r1 >= r2 > 0, got r1={self.r1}, r2={self.r2}")

    @property
    def ratio(self) -> float:
        return self.r1 / self.r2


def radial_distance(beta: float, shape: EllipsoidShape) -> float:
    """Center-to-surface distance at meridian angle ``beta`` from the long axis.

    ``r1*r2 / sqrt(r1^2 sin^2(beta) + r2^2 cos^2(beta))``, so that the surface
    point ``(r2-plane: |r| sin(beta), axis: |r| cos(beta))`` lies on the
    meridian ellipse.
    """
    s, c = math.sin(beta), math.cos(beta)
    return shape.r1 * shape.r2 / math.sqrt((shape.r1 * s) ** 2 + (shape.r2 * c) ** 2)


def radial_distance_derivative(beta: float, shape: EllipsoidShape) -> float:
    """d|r|/d(beta) of :func:`radial_distance`."""
    r1, r2 = shape.r1, shape.r2
    s, c = math.sin(beta), math.cos(beta)
    g = (r1 * s) ** 2 + (r2 * c) ** 2
    return -r1 * r2 * (r1 * r1 - r2 * r2) * s * c / g ** 1.5


def ring_radius_of_z(z: float, shape: EllipsoidShape) -> float:
    """Radius of the circle of latitude at axial coordinate ``z``.

    Raises:
        GeometryDomainError: if ``|z| > r1``.
    """
    if abs(z) > shape.r1:
        raise GeometryDomainError(f"axial coordinate |z|={abs(z)} exceeds long semi-axis {shape.r1}")
    arg = shape.r2 ** 2 - shape.r2 ** 2 * z * z / shape.r1 ** 2
    return math.sqrt(max(arg, 0.0))


def ring_radius_of_beta(beta: float, shape: EllipsoidShape) -> float:
    """Ring radius expressed through the meridian angle instead of z."""
    r = radial_distance(beta, shape)
    return ring_radius_of_z(r * math.cos(beta), shape)


def surface_point(alpha_s: float, beta_s: float, shape: EllipsoidShape) -> np.ndarray:
    """Shell surface point in local coordinates.

    ``|r(beta_s)| * (cos(alpha_s), sin(beta_s) sin(alpha_s), -cos(beta_s) sin(alpha_s))``.

    The parameterization is exact on the contact meridian ``alpha_s = +-pi/2``
    (and everywhere for a sphere), which is the slice all contact-point
    calculations run on.
    """
    r = radial_distance(beta_s, shape)
    sa, ca = math.sin(alpha_s), math.cos(alpha_s)
    sb, cb = math.sin(beta_s), math.cos(beta_s)
    return r * np.array([ca, sb * sa, -cb * sa])


@dataclass(frozen=True)
class ContactPoint:
    """Where the tilted shell touches the ground.

    Attributes:
        z_p: axial coordinate of the contact point [m]
        beta_p: angle from the long axis to the center-to-contact direction [rad]
        radial_distance: center-to-contact distance |r(beta_p)| [m]
        ring_radius: ring radius at the contact latitude r_alpha(beta_p) [m]
    """

    z_p: float
    beta_p: float
    radial_distance: float
    ring_radius: float


def _contact_scalars(beta_v: float, shape: EllipsoidShape) -> tuple[float, float, float, float]:
    """(z_p, beta_p, |r(beta_p)|, ring radius) without the dataclass wrapper."""
    r1, r2 = shape.r1, shape.r2
    s, c = math.sin(beta_v), math.cos(beta_v)
    z_p = r1 * c / math.sqrt(c * c + (r2 / r1) ** 2 * s * s)
    ring = math.sqrt(max(r2 * r2 * (1.0 - z_p * z_p / (r1 * r1)), 0.0))
    return z_p, math.atan2(ring, z_p), math.hypot(z_p, ring), ring


def contact_point(beta_v: float, shape: EllipsoidShape) -> ContactPoint:
    """Contact geometry for inclination ``beta_v`` of the long axis.

    The contact point is the support point of the meridian ellipse in the
    downhill direction:

        z_p    = r1 cos(beta_v) / sqrt(cos^2(beta_v) + (r2/r1)^2 sin^2(beta_v))
        beta_p = atan2(r_alpha(z_p), z_p)

    For a sphere ``beta_p == beta_v`` exactly; for a prolate shell
    ``beta_p <= beta_v`` on (0, pi/2).
    """
    z_p, beta_p, dist, ring = _contact_scalars(beta_v, shape)
    return ContactPoint(z_p=z_p, beta_p=beta_p, radial_distance=dist, ring_radius=ring)


def contact_angle_slope(beta_v: float, shape: EllipsoidShape) -> float:
    """d(beta_p)/d(beta_v), from ``tan(beta_p) = (r2/r1)^2 tan(beta_v)``.

    Continuous and positive on [0, pi]; equals (r2/r1)^2 at the pole and
    (r1/r2)^2 at the equator.
    """
    a = shape.r2 ** 2
    b = shape.r1 ** 2
    s, c = math.sin(beta_v), math.cos(beta_v)
    return a * b / ((b * c) ** 2 + (a * s) ** 2)


def center_height(beta_v: float, shape: EllipsoidShape) -> float:
    """Height of the shell center above the ground at inclination ``beta_v``.

    Support distance of the meridian ellipse:
    ``sqrt(r1^2 cos^2(beta_v) + r2^2 sin^2(beta_v))``.
    """
    s, c = math.sin(beta_v), math.cos(beta_v)
    return math.hypot(shape.r1 * c, shape.r2 * s)
