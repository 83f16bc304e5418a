"""Fixed-step time integration of the full robot state.

The integrated vector is

    [alpha_v, beta_v, gamma_v, omega_x, omega_y, omega_z,
     gamma_slip_rate, x_p, y_p, rho]

Attitude angles follow the Euler-rate inversion of the shell angular
velocity.  Under the z-x-z attitude convention the heading (world azimuth of
the tilt) is ``alpha_v`` and the body-spin angle is ``gamma_v``; the rolling
track formulas are written with the opposite naming, so this module feeds the
spin rate into their ``alpha_v_rate`` slot and the heading into ``gamma_v``.
A pure twist about the world vertical enters the heading rate only, which is
exactly the slip coupling of the rolling relations.

The twist-slip rate is an auxiliary state: pinned to zero during stiction,
first-order relaxation ``theta_eff * d(slip)/dt = t_f - rho_f * slip`` while
slipping, with ``theta_eff`` the combined inertia projected on the world
vertical.  The friction regime is frozen inside a step and re-evaluated at
step boundaries with hysteresis: stiction breaks when ``|t_f| > tau_fcrit``
and re-engages only once ``|t_f| <= tau_fcrit`` and the slip has decayed
below 1e-8 rad/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dynamics as dyn
from .errors import NonFiniteStateError
from .geometry import EllipsoidShape, wrap_angle
from .kinematics import (
    AttitudeState,
    GroundTrack,
    SlipState,
    center_position,
    gimbal_angles,
    rolling_rates,
)

STATE_LAYOUT = ("alpha_v", "beta_v", "gamma_v", "omega_x", "omega_y", "omega_z",
                "gamma_slip_rate", "x_p", "y_p", "rho")

SLIP_REENGAGE_TOL = 1e-8  # rad/s


# ---------------------------------------------------------------------------
# actuator profiles
# ---------------------------------------------------------------------------

class ConstantProfile:
    """Constant time function."""

    def __init__(self, value: float):
        self._value = float(value)

    def value(self, t: float) -> float:
        return self._value

    def rate(self, t: float) -> float:
        return 0.0

    def accel(self, t: float) -> float:
        return 0.0


class RampProfile:
    """start + slope * t."""

    def __init__(self, start: float, slope: float):
        self.start = float(start)
        self.slope = float(slope)

    def value(self, t: float) -> float:
        return self.start + self.slope * t

    def rate(self, t: float) -> float:
        return self.slope

    def accel(self, t: float) -> float:
        return 0.0


class SinusoidProfile:
    """offset + amplitude * sin(2 pi frequency t + phase)."""

    def __init__(self, amplitude: float, frequency: float, phase: float = 0.0,
                 offset: float = 0.0):
        self.amplitude = float(amplitude)
        self.omega = 2.0 * math.pi * float(frequency)
        self.phase = float(phase)
        self.offset = float(offset)

    def value(self, t: float) -> float:
        return self.offset + self.amplitude * math.sin(self.omega * t + self.phase)

    def rate(self, t: float) -> float:
        return self.amplitude * self.omega * math.cos(self.omega * t + self.phase)

    def accel(self, t: float) -> float:
        return -self.amplitude * self.omega ** 2 * math.sin(self.omega * t + self.phase)


class SplineProfile:
    """Natural cubic spline through (t_i, v_i) knots, linear beyond the ends."""

    def __init__(self, times, values):
        t = np.asarray(times, dtype=float)
        v = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or len(t) < 2:
            raise ValueError("spline needs matching 1-d knot arrays with >= 2 points")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("spline knot times must be strictly increasing")
        self.t, self.v = t, v
        n = len(t)
        # second derivatives of the natural spline: tridiagonal system
        m = np.zeros((n, n))
        rhs = np.zeros(n)
        m[0, 0] = m[-1, -1] = 1.0
        h = np.diff(t)
        for i in range(1, n - 1):
            m[i, i - 1] = h[i - 1]
            m[i, i] = 2.0 * (h[i - 1] + h[i])
            m[i, i + 1] = h[i]
            rhs[i] = 6.0 * ((v[i + 1] - v[i]) / h[i] - (v[i] - v[i - 1]) / h[i - 1])
        self.m2 = np.linalg.solve(m, rhs)

    def _segment(self, t: float) -> int:
        return int(np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, len(self.t) - 2))

    def value(self, t: float) -> float:
        if t <= self.t[0]:
            return float(self.v[0] + self.rate(self.t[0]) * (t - self.t[0]))
        if t >= self.t[-1]:
            return float(self.v[-1] + self.rate(self.t[-1]) * (t - self.t[-1]))
        i = self._segment(t)
        h = self.t[i + 1] - self.t[i]
        a = (self.t[i + 1] - t) / h
        b = (t - self.t[i]) / h
        return float(a * self.v[i] + b * self.v[i + 1]
                     + ((a ** 3 - a) * self.m2[i] + (b ** 3 - b) * self.m2[i + 1]) * h * h / 6.0)

    def rate(self, t: float) -> float:
        t = float(np.clip(t, self.t[0], self.t[-1]))
        i = self._segment(t)
        h = self.t[i + 1] - self.t[i]
        a = (self.t[i + 1] - t) / h
        b = (t - self.t[i]) / h
        return float((self.v[i + 1] - self.v[i]) / h
                     + ((1.0 - 3.0 * a * a) * self.m2[i] + (3.0 * b * b - 1.0) * self.m2[i + 1]) * h / 6.0)

    def accel(self, t: float) -> float:
        if t < self.t[0] or t > self.t[-1]:
            return 0.0
        i = self._segment(t)
        h = self.t[i + 1] - self.t[i]
        a = (self.t[i + 1] - t) / h
        b = (t - self.t[i]) / h
        return float(a * self.m2[i] + b * self.m2[i + 1])


@dataclass
class ActuatorProfile:
    """Servo angles mu1(t), mu2(t) and the gyro spin rate rho_rate(t).

    Each entry provides value/rate/accel; the gimbal angles are the linear
    mixing of the two servo angles, the gyro angle integrates rho_rate.
    """

    mu1: object
    mu2: object
    rho_rate: object

    def chain_drive(self, t: float):
        """(phi, psi) with rates and accelerations, plus (rho_rate, rho_accel)."""
        phi, psi = gimbal_angles(self.mu1.value(t), self.mu2.value(t))
        phi_rate, psi_rate = gimbal_angles(self.mu1.rate(t), self.mu2.rate(t))
        phi_accel, psi_accel = gimbal_angles(self.mu1.accel(t), self.mu2.accel(t))
        return (phi, psi, phi_rate, psi_rate, phi_accel, psi_accel,
                self.rho_rate.value(t), self.rho_rate.rate(t))

    def check_consistency(self, t_end: float, samples: int = 41, h: float = 1e-6,
                          tol: float = 1e-4) -> None:
        """Finite-difference check that rates/accels match the values.

        Raises:
            ValueError: naming the offending component.
        """
        ts = np.linspace(h, max(t_end, 10.0 * h) - h, samples)
        for name, fn in (("mu1", self.mu1), ("mu2", self.mu2), ("rho_rate", self.rho_rate)):
            for t in ts:
                fd_rate = (fn.value(t + h) - fn.value(t - h)) / (2.0 * h)
                scale = max(1.0, abs(fn.rate(t)), abs(fn.value(t)))
                if abs(fd_rate - fn.rate(t)) > tol * scale:
                    raise ValueError(f"profile {name}: rate inconsistent with value at t={t}")
                fd_accel = (fn.rate(t + h) - fn.rate(t - h)) / (2.0 * h)
                scale = max(1.0, abs(fn.accel(t)), abs(fn.rate(t)))
                if abs(fd_accel - fn.accel(t)) > tol * scale:
                    raise ValueError(f"profile {name}: accel inconsistent with rate at t={t}")


def static_profile() -> ActuatorProfile:
    """All actuators frozen at zero."""
    return ActuatorProfile(ConstantProfile(0.0), ConstantProfile(0.0), ConstantProfile(0.0))


# ---------------------------------------------------------------------------
# state
# ---------------------------------------------------------------------------

@dataclass
class SimState:
    """Complete integrable state plus the discrete friction regime."""

    attitude: AttitudeState = field(default_factory=AttitudeState)
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    slip: SlipState = field(default_factory=SlipState)
    track: GroundTrack = field(default_factory=GroundTrack)
    chain: dyn.ChainState = field(default_factory=dyn.ChainState)
    friction_mode: str = dyn.STICTION
    time: float = 0.0

    def pack(self) -> np.ndarray:
        a = self.attitude
        return np.array([a.alpha_v, a.beta_v, a.gamma_v,
                         self.omega[0], self.omega[1], self.omega[2],
                         self.slip.gamma_slip_rate,
                         self.track.x_p, self.track.y_p, self.chain.rho])


def _normalize_angles(y: np.ndarray) -> None:
    """Re-wrap the attitude chart in place; beta_v reflected into [0, pi].

    The reflection (alpha, -beta, gamma) -> (alpha+pi, beta, gamma+pi)
    represents the same rotation, so omega is untouched.
    """
    beta = y[1]
    if beta < 0.0 or beta > math.pi:
        y[1] = abs(wrap_angle(beta))
        y[0] += math.pi
        y[2] += math.pi
    y[0] = wrap_angle(y[0])
    y[2] = wrap_angle(y[2])


class Simulator:
    """Derivative evaluation and stepping for one scenario.

    Pure apart from the explicit state arguments; instances may be shared
    across threads for independent trajectories.
    """

    def __init__(self, profile: ActuatorProfile, params: dyn.RobotParams,
                 shape: EllipsoidShape | None = None, gravity: bool = True,
                 friction: bool = True):
        self.profile = profile
        self.params = params
        self.shape = shape if shape is not None else params.shape
        self.gravity = gravity
        self.friction = friction
        self.chain = dyn.frame_chain_from_params(params)

    # -- state assembly ----------------------------------------------------

    def chain_state(self, t: float, y: np.ndarray,
                    omega_dot: np.ndarray | None = None) -> dyn.ChainState:
        (phi, psi, phi_rate, psi_rate, phi_accel, psi_accel,
         rho_rate, rho_accel) = self.profile.chain_drive(t)
        return dyn.ChainState(phi=phi, psi=psi, rho=y[9],
                              phi_rate=phi_rate, psi_rate=psi_rate, rho_rate=rho_rate,
                              phi_accel=phi_accel, psi_accel=psi_accel, rho_accel=rho_accel,
                              omega=y[3:6].copy(),
                              omega_dot=np.zeros(3) if omega_dot is None else omega_dot)

    def attitude(self, y: np.ndarray) -> AttitudeState:
        rates = dyn.euler_rates_regularized(y[3:6], y[1], y[2])
        return AttitudeState(alpha_v=y[0], beta_v=y[1], gamma_v=y[2],
                             alpha_v_rate=rates[0], beta_v_rate=rates[1],
                             gamma_v_rate=rates[2])

    def sim_state(self, t: float, y: np.ndarray, mode: str) -> SimState:
        att = self.attitude(y)
        cx, cy, cz = center_position(y[7], y[8], y[1], y[0], self.shape)
        return SimState(attitude=att, omega=y[3:6].copy(),
                        slip=SlipState(y[6]),
                        track=GroundTrack(x_p=y[7], y_p=y[8], cx=cx, cy=cy, cz=cz),
                        chain=self.chain_state(t, y), friction_mode=mode, time=t)

    # -- derivative ---------------------------------------------------------

    def derivative(self, t: float, y: np.ndarray,
                   mode: str) -> tuple[np.ndarray, dyn.TorqueBreakdown]:
        """Packed state derivative; deterministic for identical inputs."""
        att = self.attitude(y)
        slip = SlipState(y[6] if mode == dyn.STOKES else 0.0)
        state = self.chain_state(t, y)

        omega_dot, breakdown = dyn.torque_balance(
            state, att, slip, self.chain, self.params, self.shape,
            mode=mode, gravity=self.gravity, friction=self.friction)

        # rolling track: the formulas name the spin rate alpha_v_rate and the
        # heading gamma_v; the attitude convention has them the other way
        rolling_view = AttitudeState(alpha_v=0.0, beta_v=att.beta_v, gamma_v=att.alpha_v,
                                     alpha_v_rate=att.gamma_v_rate,
                                     beta_v_rate=att.beta_v_rate)
        _, x_p_rate, y_p_rate = rolling_rates(rolling_view, SlipState(0.0), self.shape)

        if mode == dyn.STICTION or not self.friction:
            slip_accel = 0.0
        else:
            k = dyn.body_vertical(att)
            theta_com, _ = dyn.factorize_tmec(self.chain, state)
            theta_eff = float(k @ theta_com @ k)
            slip_accel = (breakdown.t_f_scalar - self.params.rho_f * y[6]) / theta_eff

        ydot = np.array([att.alpha_v_rate, att.beta_v_rate, att.gamma_v_rate,
                         omega_dot[0], omega_dot[1], omega_dot[2],
                         slip_accel, x_p_rate, y_p_rate, state.rho_rate])
        return ydot, breakdown

    def stiction_load(self, t: float, y: np.ndarray) -> float:
        """Twist load t_f the stiction friction would have to cancel."""
        return dyn.stiction_load(self.chain_state(t, y), self.attitude(y),
                                 self.chain, self.params, self.shape, self.gravity)

    # -- stepping -----------------------------------------------------------

    def rk4(self, t: float, y: np.ndarray, dt: float, mode: str) -> np.ndarray:
        """One classical Runge-Kutta step with the friction regime frozen."""
        k1, _ = self.derivative(t, y, mode)
        k2, _ = self.derivative(t + 0.5 * dt, y + 0.5 * dt * k1, mode)
        k3, _ = self.derivative(t + 0.5 * dt, y + 0.5 * dt * k2, mode)
        k4, _ = self.derivative(t + dt, y + dt * k3, mode)
        out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _normalize_angles(out)
        return out

    def update_mode(self, t: float, y: np.ndarray, mode: str) -> str:
        """Hysteretic regime switch at a step boundary; may zero the slip state."""
        if not self.friction:
            return mode
        t_f = self.stiction_load(t, y)
        if mode == dyn.STICTION:
            if abs(t_f) > self.params.tau_fcrit:
                return dyn.STOKES
            y[6] = 0.0
            return dyn.STICTION
        if abs(t_f) <= self.params.tau_fcrit and abs(y[6]) < SLIP_REENGAGE_TOL:
            y[6] = 0.0
            return dyn.STICTION
        return dyn.STOKES


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def derivative(state: SimState, profile: ActuatorProfile, params: dyn.RobotParams,
               shape: EllipsoidShape | None = None, gravity: bool = True,
               friction: bool = True) -> np.ndarray:
    """Packed time derivative of a full state (layout in STATE_LAYOUT)."""
    sim = Simulator(profile, params, shape, gravity, friction)
    ydot, _ = sim.derivative(state.time, state.pack(), state.friction_mode)
    return ydot


def step_rk4(state: SimState, profile: ActuatorProfile, params: dyn.RobotParams,
             shape: EllipsoidShape | None = None, dt: float = 1e-4,
             gravity: bool = True, friction: bool = True) -> SimState:
    """Advance one RK4 step; regime re-evaluated at the boundary."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    sim = Simulator(profile, params, shape, gravity, friction)
    y = sim.rk4(state.time, state.pack(), dt, state.friction_mode)
    mode = sim.update_mode(state.time + dt, y, state.friction_mode)
    return sim.sim_state(state.time + dt, y, mode)


@dataclass
class LogSample:
    """One sampled instant of a trajectory."""

    time: float
    state: SimState
    torques: dyn.TorqueBreakdown


@dataclass
class TrajectoryLog:
    """Ordered trajectory samples plus run bookkeeping."""

    samples: list[LogSample]
    dt: float
    sample_every: int
    mode_switches: int


LOG_COLUMNS = (
    "time",
    "alpha_v", "beta_v", "gamma_v",
    "alpha_v_rate", "beta_v_rate", "gamma_v_rate",
    "omega_x", "omega_y", "omega_z",
    "phi", "psi", "rho",
    "gamma_slip_rate",
    "x_p", "y_p", "c_x", "c_y", "c_z",
    "t_mec_x", "t_mec_y", "t_mec_z",
    "t_gravity_x", "t_gravity_y", "t_gravity_z",
    "t_virtual_x", "t_virtual_y", "t_virtual_z",
    "t_friction_x", "t_friction_y", "t_friction_z",
    "t_f",
    "friction_mode",
)


def sample_row(sample: LogSample) -> list:
    """Flatten one sample into the LOG_COLUMNS order."""
    s, tq = sample.state, sample.torques
    a, tr = s.attitude, s.track
    return [sample.time,
            a.alpha_v, a.beta_v, a.gamma_v,
            a.alpha_v_rate, a.beta_v_rate, a.gamma_v_rate,
            s.omega[0], s.omega[1], s.omega[2],
            s.chain.phi, s.chain.psi, s.chain.rho,
            s.slip.gamma_slip_rate,
            tr.x_p, tr.y_p, tr.cx, tr.cy, tr.cz,
            tq.t_mec[0], tq.t_mec[1], tq.t_mec[2],
            tq.t_gravity[0], tq.t_gravity[1], tq.t_gravity[2],
            tq.t_virtual[0], tq.t_virtual[1], tq.t_virtual[2],
            tq.t_friction[0], tq.t_friction[1], tq.t_friction[2],
            tq.t_f_scalar,
            s.friction_mode]


def simulate(initial: SimState, profile: ActuatorProfile, params: dyn.RobotParams,
             shape: EllipsoidShape | None = None, t_end: float = 1.0,
             dt: float = 1e-4, sample_every: int = 1, gravity: bool = True,
             friction: bool = True) -> TrajectoryLog:
    """Integrate from ``initial`` to ``t_end``, sampling every N-th step.

    The initial state and the final state are always sampled.  Aborts with
    :class:`NonFiniteStateError` if any state component stops being finite.
    """
    if t_end < 0.0:
        raise ValueError("t_end must be >= 0")
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")

    sim = Simulator(profile, params, shape, gravity, friction)
    n_steps = int(round(t_end / dt))
    y = initial.pack()
    mode = initial.friction_mode
    t0 = initial.time

    samples: list[LogSample] = []
    switches = 0

    def record(t, y, mode):
        state = sim.sim_state(t, y, mode)
        _, breakdown = sim.derivative(t, y, mode)
        samples.append(LogSample(time=t, state=state, torques=breakdown))

    record(t0, y, mode)
    for i in range(n_steps):
        t = t0 + i * dt
        y = sim.rk4(t, y, dt, mode)
        if not np.isfinite(y).all():
            bad = [name for name, v in zip(STATE_LAYOUT, y) if not math.isfinite(v)]
            raise NonFiniteStateError(
                f"non-finite state component(s) {bad} at t={t + dt:.6g}")
        new_mode = sim.update_mode(t + dt, y, mode)
        if new_mode != mode:
            switches += 1
            mode = new_mode
        if (i + 1) % sample_every == 0 or i == n_steps - 1:
            record(t0 + (i + 1) * dt, y, mode)

    return TrajectoryLog(samples=samples, dt=dt, sample_every=sample_every,
                         mode_switches=switches)
