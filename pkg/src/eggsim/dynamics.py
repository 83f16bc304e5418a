"""Four-body momentum recursion, torque models, and the explicit rotational ODE.

Everything is expressed as torques about the ground contact point in the
shell frame.  The kinematic chain shell -> outer gimbal -> inner gimbal ->
gyro is pure rotations; the recursive angular momentum and its derivative
match the expanded golden sums of :mod:`eggsim.symbolic` term by term.

Sign conventions:

* ``omega`` is the shell-frame angular velocity of the body-to-world
  attitude ``R = R_z(alpha_v) R_x(beta_v) R_z(gamma_v)``, i.e.
  ``dR/dt = R [omega]x``.
* The body-frame balance is ``Theta_com @ omega_dot + B = T_applied - omega x L``;
  the transport term is carried to the right-hand side as the gyroscopic
  torque ``L x omega``, which keeps the world-frame angular momentum of a free
  body constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInertiaError, GimbalLockError
from .geometry import EllipsoidShape, _contact_scalars, contact_point, rot_x, rot_z
from .kinematics import AttitudeState, SlipState

GRAVITY = 9.81  # m/s^2

STICTION = "stiction"
STOKES = "stokes"

_G_X = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
_G_Z = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
_GENERATORS = {"x": _G_X, "z": _G_Z}
_ROTATIONS = {"x": rot_x, "z": rot_z}
_AXIS_UNIT = {"x": np.array([1.0, 0.0, 0.0]), "z": np.array([0.0, 0.0, 1.0])}


@dataclass(frozen=True)
class RobotParams:
    """Physical quantities of the robot.

    Attributes:
        theta_xy, theta_z: shell inertia about equatorial / long axes [kg m^2]
        mass: total robot mass [kg]
        r_long, r_short: shell semi-axes [m]
        theta_phi_x, theta_phi_y: outer-gimbal inertia entries [kg m^2]
            (the z entry repeats the x entry, matching the rotationally
            symmetric construction of the ring)
        theta_psi_x, theta_psi_z: inner-gimbal inertia entries [kg m^2]
        theta_g_x, theta_g_z: gyro inertia entries; theta_g_z is the spin
            (rotor) inertia [kg m^2]
        tau_fcrit: stiction threshold for the vertical twist torque [N m]
        rho_f: Stokes twist-friction coefficient [N m s]
    """

    theta_xy: float
    theta_z: float
    mass: float
    r_long: float
    r_short: float
    theta_phi_x: float
    theta_phi_y: float
    theta_psi_x: float
    theta_psi_z: float
    theta_g_x: float
    theta_g_z: float
    tau_fcrit: float
    rho_f: float

    def __post_init__(self):
        positive = ["theta_xy", "theta_z", "mass", "theta_phi_x", "theta_phi_y",
                    "theta_psi_x", "theta_psi_z", "theta_g_x", "theta_g_z"]
        for name in positive:
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("tau_fcrit", "rho_f"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not (self.r_long >= self.r_short > 0.0):
            raise ValueError("need r_long >= r_short > 0")

    @property
    def theta_rot(self) -> float:
        """Gyro spin-axis inertia (alias of theta_g_z)."""
        return self.theta_g_z

    @property
    def shape(self) -> EllipsoidShape:
        return EllipsoidShape(self.r_long, self.r_short)


@dataclass
class ChainState:
    """Joint angles of the actuator chain, their rates, and the shell rates.

    ``rho`` is the gyro spin angle and is left unwrapped.
    """

    phi: float = 0.0
    psi: float = 0.0
    rho: float = 0.0
    phi_rate: float = 0.0
    psi_rate: float = 0.0
    rho_rate: float = 0.0
    phi_accel: float = 0.0
    psi_accel: float = 0.0
    rho_accel: float = 0.0
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega_dot: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def joint_angle(self, source: str) -> tuple[float, float, float]:
        """(angle, rate, accel) for a named joint."""
        return (getattr(self, source), getattr(self, f"{source}_rate"),
                getattr(self, f"{source}_accel"))


@dataclass(frozen=True)
class Frame:
    """One link of the kinematic chain.

    ``axis``/``angle_source`` are None for the shell (frame 1), which has no
    relative rotation against its predecessor.
    """

    axis: str | None
    angle_source: str | None
    inertia_diag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.inertia_diag, dtype=float)
        if d.shape != (3,) or np.any(d <= 0.0):
            raise ValueError("inertia_diag must be 3 positive entries")
        object.__setattr__(self, "inertia_diag", d)
        object.__setattr__(self, "_inertia", np.diag(d))

    @property
    def inertia(self) -> np.ndarray:
        return self._inertia


@dataclass(frozen=True)
class FrameChain:
    """The four Table-style frames: shell, outer gimbal, inner gimbal, gyro."""

    frames: tuple[Frame, Frame, Frame, Frame]

    def __post_init__(self):
        if len(self.frames) != 4 or self.frames[0].axis is not None:
            raise ValueError("chain must hold exactly 4 frames, the first without a joint")
        for f in self.frames[1:]:
            if f.axis not in ("x", "z") or f.angle_source not in ("phi", "psi", "rho"):
                raise ValueError("frames 2..4 need an x/z axis and a phi/psi/rho source")
        object.__setattr__(self, "_diags", tuple(f.inertia_diag for f in self.frames))
        object.__setattr__(self, "_inertias", tuple(f.inertia for f in self.frames))


def frame_chain_from_params(params: RobotParams) -> FrameChain:
    """Standard chain: R_z(phi) outer ring, R_x(psi) inner ring, R_z(rho) gyro."""
    return FrameChain((
        Frame(None, None, np.array([params.theta_xy, params.theta_xy, params.theta_z])),
        Frame("z", "phi", np.array([params.theta_phi_x, params.theta_phi_y, params.theta_phi_x])),
        Frame("x", "psi", np.array([params.theta_psi_x, params.theta_psi_x, params.theta_psi_z])),
        Frame("z", "rho", np.array([params.theta_g_x, params.theta_g_x, params.theta_g_z])),
    ))


def _axis_rot_pair(axis: str, angle: float, rate: float) -> tuple[np.ndarray, np.ndarray]:
    """(R, dR/dt) for a coordinate-axis rotation; dR = rate * G_axis @ R, filled directly."""
    c, s = math.cos(angle), math.sin(angle)
    rc, rs = rate * c, rate * s
    if axis == "z":
        r = np.array((c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
        dr = np.array((-rs, -rc, 0.0, rc, -rs, 0.0, 0.0, 0.0, 0.0))
    else:
        r = np.array((1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
        dr = np.array((0.0, 0.0, 0.0, 0.0, -rs, -rc, 0.0, rc, -rs))
    return r.reshape(3, 3), dr.reshape(3, 3)


class _ChainEval:
    """One-pass evaluation of the chain state: rotations, frame rates, momentum.

    All recursions below share this so a torque balance walks the chain once.
    """

    __slots__ = ("diags", "inertias", "rs", "drs", "w_rs", "dw_rs", "omegas",
                 "static_joints")

    def __init__(self, chain: FrameChain, state: ChainState):
        self.diags = chain._diags
        self.inertias = chain._inertias
        self.rs, self.drs, self.w_rs, self.dw_rs = [], [], [], []
        rates = []
        for frame in chain.frames[1:]:
            angle, rate, accel = state.joint_angle(frame.angle_source)
            r, dr = _axis_rot_pair(frame.axis, angle, rate)
            unit = _AXIS_UNIT[frame.axis]
            self.rs.append(r)
            self.drs.append(dr)
            self.w_rs.append(rate * unit)
            self.dw_rs.append(accel * unit)
            rates.extend((rate, accel))
        self.static_joints = not any(rates)

        self.omegas = [np.asarray(state.omega, dtype=float)]
        for r, w_r in zip(self.rs, self.w_rs):
            self.omegas.append(w_r + r @ self.omegas[-1])

    def momentum_levels(self) -> list[np.ndarray]:
        """L_4 .. L_1 via L_{n-1} = R_n^{r-} @ L_n + Theta_{n-1} omega_{n-1}."""
        levels = [None] * 4
        levels[3] = self.diags[3] * self.omegas[3]
        for n in (3, 2, 1):
            levels[n - 1] = self.rs[n - 1].T @ levels[n] + self.diags[n - 1] * self.omegas[n - 1]
        return levels

    def momentum(self) -> np.ndarray:
        return self.momentum_levels()[0]

    def tmec(self, omega_dot: np.ndarray) -> np.ndarray:
        """dL/dt recursion for a given shell acceleration."""
        omega_dots = [np.asarray(omega_dot, dtype=float)]
        for n in range(3):
            omega_dots.append(self.dw_rs[n] + self.drs[n] @ self.omegas[n]
                              + self.rs[n] @ omega_dots[-1])
        levels = self.momentum_levels()
        ldot = self.diags[3] * omega_dots[3]
        for n in (3, 2, 1):
            ldot = self.drs[n - 1].T @ levels[n] + self.rs[n - 1].T @ ldot \
                + self.diags[n - 1] * omega_dots[n - 1]
        return ldot

    def bias(self) -> np.ndarray:
        """T_mec at zero shell acceleration; exactly zero with frozen joints."""
        if self.static_joints:
            return np.zeros(3)
        return self.tmec(np.zeros(3))

    def theta_com(self) -> np.ndarray:
        """Nested congruence sum R2- (R3- (R4- Th4 R4 + Th3) R3 + Th2) R2 + Th1."""
        r2, r3, r4 = self.rs
        inner = (r4.T * self.diags[3]) @ r4 + self.inertias[2]
        inner = (r3.T @ inner) @ r3 + self.inertias[1]
        return (r2.T @ inner) @ r2 + self.inertias[0]


def chain_omegas(chain: FrameChain, state: ChainState) -> list[np.ndarray]:
    """Angular velocities of the four frames: omega_n = omega_n^r + R_n^r @ omega_{n-1}."""
    return _ChainEval(chain, state).omegas


def total_angular_momentum(chain: FrameChain, state: ChainState) -> np.ndarray:
    """Total angular momentum L in the shell frame.

    Inward recursion ``L_{n-1} = R_n^{r-} @ L_n + Theta_{n-1} @ omega_{n-1}``
    starting from the gyro.
    """
    return _ChainEval(chain, state).momentum()


def mechanical_torque(chain: FrameChain, state: ChainState) -> np.ndarray:
    """T_mec = dL/dt in the shell frame, using the state's omega_dot."""
    return _ChainEval(chain, state).tmec(state.omega_dot)


def factorize_tmec(chain: FrameChain, state: ChainState) -> tuple[np.ndarray, np.ndarray]:
    """Split T_mec into ``Theta_com @ omega_dot + b``.

    ``Theta_com`` is the nested congruence sum

        R2- (R3- (R4- Th4 R4 + Th3) R3 + Th2) R2 + Th1

    and ``b`` is the torque left when the shell acceleration is zero.  Every
    ``b`` summand carries a joint rate or acceleration, so frozen actuators
    give b = 0 exactly.
    """
    ev = _ChainEval(chain, state)
    return ev.theta_com(), ev.bias()


def gravity_torque(att: AttitudeState, shape: EllipsoidShape, mass: float) -> np.ndarray:
    """Torque of gravity about the contact point, in the shell frame.

    Magnitude ``mass * 9.81 * sin(beta_v) * |r(beta_p)|``.  The direction is
    horizontal in the inclination sense: perpendicular to both the body-frame
    vertical and the center-to-contact direction, which under the z-x-z
    attitude used here is ``R_z(-gamma_v) @ (1, 0, 0)``.
    """
    dist = _contact_scalars(att.beta_v, shape)[2]
    magnitude = mass * GRAVITY * math.sin(att.beta_v) * dist
    return magnitude * np.array([math.cos(att.gamma_v), -math.sin(att.gamma_v), 0.0])


def virtual_torque(omega: np.ndarray, L: np.ndarray) -> np.ndarray:
    """Cross product omega x L perceived in the rotating shell frame."""
    return np.cross(omega, L)


def body_vertical(att: AttitudeState) -> np.ndarray:
    """World up-axis expressed in the shell frame: R^T @ (0,0,1)."""
    sb, cb = math.sin(att.beta_v), math.cos(att.beta_v)
    sg, cg = math.sin(att.gamma_v), math.cos(att.gamma_v)
    return np.array([sb * sg, sb * cg, cb])


def twist_load(total_local_torque: np.ndarray, att: AttitudeState) -> float:
    """World-vertical component t_f of a shell-frame torque."""
    return float(body_vertical(att) @ total_local_torque)


def friction_torque(total_local_torque: np.ndarray, att: AttitudeState,
                    slip: SlipState, params: RobotParams) -> tuple[np.ndarray, str]:
    """Twist-friction torque in the shell frame, plus the regime it is in.

    ``total_local_torque`` is the net shell-frame torque the friction reacts
    to: gravity + gyroscopic term + mechanism bias reaction (-b).  Below the
    stiction threshold and without slip the world-vertical component is
    cancelled exactly; otherwise the Stokes torque ``-rho_f * gamma_slip_rate``
    acts along the world vertical.
    """
    k = body_vertical(att)
    t_f = float(k @ total_local_torque)
    if abs(t_f) <= params.tau_fcrit and slip.gamma_slip_rate == 0.0:
        return -t_f * k, STICTION
    return -params.rho_f * slip.gamma_slip_rate * k, STOKES


def friction_torque_in_mode(total_local_torque: np.ndarray, att: AttitudeState,
                            slip: SlipState, params: RobotParams,
                            mode: str) -> tuple[np.ndarray, float]:
    """Friction torque with the regime pinned by the integrator's hysteresis."""
    k = body_vertical(att)
    t_f = float(k @ total_local_torque)
    if mode == STICTION:
        return -t_f * k, t_f
    return -params.rho_f * slip.gamma_slip_rate * k, t_f


def _solve3(a: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Cofactor solve of a 3x3 system; raises on a singular matrix."""
    a00, a01, a02, a10, a11, a12, a20, a21, a22 = a.ravel().tolist()
    c00 = a11 * a22 - a12 * a21
    c01 = a12 * a20 - a10 * a22
    c02 = a10 * a21 - a11 * a20
    det = a00 * c00 + a01 * c01 + a02 * c02
    scale = max(abs(a00), abs(a11), abs(a22), 1e-300)
    if not math.isfinite(det) or abs(det) <= 1e-15 * scale ** 3:
        raise DegenerateInertiaError(f"combined inertia tensor is singular (det={det})")
    c10 = a02 * a21 - a01 * a22
    c11 = a00 * a22 - a02 * a20
    c12 = a01 * a20 - a00 * a21
    c20 = a01 * a12 - a02 * a11
    c21 = a02 * a10 - a00 * a12
    c22 = a00 * a11 - a01 * a10
    x0, x1, x2 = rhs.tolist()
    return np.array(((c00 * x0 + c10 * x1 + c20 * x2) / det,
                     (c01 * x0 + c11 * x1 + c21 * x2) / det,
                     (c02 * x0 + c12 * x1 + c22 * x2) / det))


@dataclass
class TorqueBreakdown:
    """Shell-frame torque contributions at one evaluation."""

    t_mec: np.ndarray
    t_gravity: np.ndarray
    t_virtual: np.ndarray
    t_friction: np.ndarray
    t_f_scalar: float
    friction_mode: str


def _cross(a, b) -> np.ndarray:
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def stiction_load(state: ChainState, att: AttitudeState, chain: FrameChain,
                  params: RobotParams, shape: EllipsoidShape,
                  gravity: bool = True) -> float:
    """Twist load t_f that stiction friction would have to cancel at this state."""
    ev = _ChainEval(chain, state)
    t_grav = gravity_torque(att, shape, params.mass) if gravity else np.zeros(3)
    total = t_grav + _cross(ev.momentum(), state.omega) - ev.bias()
    return twist_load(total, att)


def torque_balance(state: ChainState, att: AttitudeState, slip: SlipState,
                   chain: FrameChain, params: RobotParams, shape: EllipsoidShape,
                   mode: str = STICTION, gravity: bool = True,
                   friction: bool = True) -> tuple[np.ndarray, TorqueBreakdown]:
    """Solve the explicit balance for omega_dot and report the contributions.

        Theta_com @ omega_dot = -b + T_G + T_frict + L x omega

    The gyroscopic term is the body-frame transport term moved to the
    right-hand side; it keeps the world angular momentum of a free body
    constant.
    """
    ev = _ChainEval(chain, state)
    theta_com = ev.theta_com()
    b = ev.bias()
    L = ev.momentum()
    t_grav = gravity_torque(att, shape, params.mass) if gravity else np.zeros(3)
    t_gyro = _cross(L, state.omega)
    total = t_grav + t_gyro - b

    if friction:
        t_fric, t_f = friction_torque_in_mode(total, att, slip, params, mode)
    else:
        t_fric, t_f = np.zeros(3), twist_load(total, att)

    omega_dot = _solve3(theta_com, total + t_fric)
    breakdown = TorqueBreakdown(
        t_mec=theta_com @ omega_dot + b,
        t_gravity=t_grav,
        t_virtual=t_gyro,
        t_friction=t_fric,
        t_f_scalar=t_f,
        friction_mode=mode if friction else STICTION,
    )
    return omega_dot, breakdown


def angular_acceleration(state: ChainState, att: AttitudeState, slip: SlipState,
                         chain: FrameChain, params: RobotParams,
                         shape: EllipsoidShape, mode: str = STICTION,
                         gravity: bool = True, friction: bool = True) -> np.ndarray:
    """Shell angular acceleration from the assembled torque balance."""
    omega_dot, _ = torque_balance(state, att, slip, chain, params, shape,
                                  mode=mode, gravity=gravity, friction=friction)
    return omega_dot


def omega_from_euler_rates(alpha_rate: float, beta_rate: float, gamma_rate: float,
                           beta: float, gamma: float) -> np.ndarray:
    """Forward z-x-z map from Euler-angle rates to the shell angular velocity."""
    sb, cb = math.sin(beta), math.cos(beta)
    sg, cg = math.sin(gamma), math.cos(gamma)
    return np.array([alpha_rate * sb * sg + beta_rate * cg,
                     alpha_rate * sb * cg - beta_rate * sg,
                     alpha_rate * cb + gamma_rate])


def euler_rates(omega: np.ndarray, beta: float, gamma: float,
                lock_tol: float = 1e-6) -> tuple[float, float, float]:
    """Invert the z-x-z body-rate map.

        alpha_rate = (w_x sin(gamma) + w_y cos(gamma)) / sin(beta)
        beta_rate  =  w_x cos(gamma) - w_y sin(gamma)
        gamma_rate =  w_z - alpha_rate * cos(beta)

    Raises:
        GimbalLockError: when ``|sin(beta)| < lock_tol``; integrators apply
        the clamped variant :func:`euler_rates_regularized` instead.
    """
    sb = math.sin(beta)
    if abs(sb) < lock_tol:
        raise GimbalLockError(f"sin(beta)={sb} is inside the lock tolerance {lock_tol}")
    return _euler_rates_sb(omega, sb, math.cos(beta), gamma)


def euler_rates_regularized(omega: np.ndarray, beta: float, gamma: float,
                            lock_tol: float = 1e-6) -> tuple[float, float, float]:
    """Euler rates with sin(beta) clamped away from zero near the lock."""
    sb = math.sin(beta)
    if abs(sb) < lock_tol:
        sb = lock_tol if sb >= 0.0 else -lock_tol
    return _euler_rates_sb(omega, sb, math.cos(beta), gamma)


def _euler_rates_sb(omega, sb: float, cb: float, gamma: float):
    sg, cg = math.sin(gamma), math.cos(gamma)
    wx, wy, wz = float(omega[0]), float(omega[1]), float(omega[2])
    alpha_rate = (wx * sg + wy * cg) / sb
    beta_rate = wx * cg - wy * sg
    gamma_rate = wz - alpha_rate * cb
    return alpha_rate, beta_rate, gamma_rate


def euler_rates_literal(omega: np.ndarray, beta: float, gamma: float) -> tuple[float, float, float]:
    """Rate map as printed in the source material, kept for comparison only.

    The matrix lacks the 1/sin(beta) factor and is not the inverse of the
    body-rate map; it agrees with :func:`euler_rates` at beta = pi/2 for the
    first two rows.  Do not use for integration.
    """
    sb, cb = math.sin(beta), math.cos(beta)
    sg, cg = math.sin(gamma), math.cos(gamma)
    wx, wy, wz = float(omega[0]), float(omega[1]), float(omega[2])
    alpha_rate = sb * sg * wx + sb * cg * wy + cb * wz
    beta_rate = cg * wx - sg * wy
    gamma_rate = wz
    return alpha_rate, beta_rate, gamma_rate
