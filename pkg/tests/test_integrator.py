import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from eggsim import dynamics as dyn
from eggsim.errors import NonFiniteStateError
from eggsim.integrator import (
    ActuatorProfile,
    ConstantProfile,
    RampProfile,
    SimState,
    SinusoidProfile,
    SplineProfile,
    Simulator,
    derivative,
    simulate,
    static_profile,
    step_rk4,
)
from eggsim.kinematics import AttitudeState


def sphere_params(radius=0.7, theta=0.01):
    """Spherical shell with negligible internals; combined tensor is isotropic."""
    eps = 1e-6
    return dyn.RobotParams(theta_xy=theta, theta_z=theta, mass=1.0,
                           r_long=radius, r_short=radius,
                           theta_phi_x=eps, theta_phi_y=eps,
                           theta_psi_x=eps, theta_psi_z=eps,
                           theta_g_x=eps, theta_g_z=eps,
                           tau_fcrit=1.0, rho_f=0.05)


def asym_params():
    return dyn.RobotParams(theta_xy=0.03, theta_z=0.008, mass=1.5,
                           r_long=0.1, r_short=0.04,
                           theta_phi_x=6e-4, theta_phi_y=9e-4,
                           theta_psi_x=3e-4, theta_psi_z=5e-4,
                           theta_g_x=2e-4, theta_g_z=4e-4,
                           tau_fcrit=10.0, rho_f=0.05)


def final_state_vector(log):
    s = log.samples[-1]
    a = s.state.attitude
    return np.array([a.alpha_v, a.beta_v, a.gamma_v, *s.state.omega])


class TestProfiles:
    def test_constant(self):
        c = ConstantProfile(3.0)
        assert (c.value(2.0), c.rate(2.0), c.accel(2.0)) == (3.0, 0.0, 0.0)

    def test_ramp(self):
        r = RampProfile(1.0, 0.5)
        assert r.value(4.0) == 3.0
        assert r.rate(10.0) == 0.5
        assert r.accel(1.0) == 0.0

    def test_sinusoid(self):
        s = SinusoidProfile(amplitude=2.0, frequency=0.25, phase=0.0, offset=1.0)
        assert s.value(1.0) == pytest.approx(3.0)
        assert s.rate(0.0) == pytest.approx(2.0 * 2 * math.pi * 0.25)
        assert s.accel(1.0) == pytest.approx(-2.0 * (2 * math.pi * 0.25) ** 2)

    def test_spline_interpolates_knots(self):
        sp = SplineProfile([0.0, 0.5, 1.0, 2.0], [0.0, 0.2, -0.1, 0.4])
        for t, v in [(0.0, 0.0), (0.5, 0.2), (1.0, -0.1), (2.0, 0.4)]:
            assert sp.value(t) == pytest.approx(v, abs=1e-12)

    def test_spline_derivatives_consistent(self):
        sp = SplineProfile([0.0, 0.5, 1.0, 2.0], [0.0, 0.2, -0.1, 0.4])
        h = 1e-6
        for t in np.linspace(0.05, 1.95, 25):
            fd = (sp.value(t + h) - sp.value(t - h)) / (2 * h)
            assert sp.rate(t) == pytest.approx(fd, abs=1e-5)
            fd2 = (sp.rate(t + h) - sp.rate(t - h)) / (2 * h)
            assert sp.accel(t) == pytest.approx(fd2, abs=1e-4)

    def test_spline_linear_extrapolation(self):
        sp = SplineProfile([0.0, 1.0], [0.0, 1.0])
        assert sp.value(2.0) == pytest.approx(2.0, abs=1e-12)
        assert sp.accel(2.0) == 0.0

    def test_spline_rejects_bad_knots(self):
        with pytest.raises(ValueError):
            SplineProfile([0.0, 0.0], [1.0, 2.0])

    def test_consistency_check_passes_for_builtins(self):
        prof = ActuatorProfile(SinusoidProfile(0.5, 1.0), RampProfile(0.0, 0.1),
                               SplineProfile([0, 1, 2], [0, 10, 5]))
        prof.check_consistency(2.0)

    def test_consistency_check_catches_lying_rate(self):
        class Lying:
            def value(self, t):
                return t * t

            def rate(self, t):
                return 0.0

            def accel(self, t):
                return 0.0

        prof = ActuatorProfile(Lying(), ConstantProfile(0.0), ConstantProfile(0.0))
        with pytest.raises(ValueError, match="mu1"):
            prof.check_consistency(2.0)


class TestDerivative:
    def test_upright_rest_is_equilibrium(self, desk_params):
        d = derivative(SimState(), static_profile(), desk_params)
        assert_allclose(d, np.zeros(10), atol=0)

    def test_deterministic_bit_identical(self, desk_params):
        state = SimState(attitude=AttitudeState(0.2, 1.0, -0.3),
                         omega=np.array([0.5, -0.2, 1.0]))
        prof = ActuatorProfile(SinusoidProfile(0.3, 0.8), ConstantProfile(0.1),
                               ConstantProfile(50.0))
        d1 = derivative(state, prof, desk_params)
        d2 = derivative(state, prof, desk_params)
        assert np.array_equal(d1, d2)

    def test_spinning_gyro_precesses_heading(self):
        # lying gyro-dominated body under gravity: heading precesses at ~T/L
        rho_rate, theta_g_z = 500.0, 1e-3
        mass, radius = 0.1, 0.01 / (9.81 * 0.1)
        p = dyn.RobotParams(theta_xy=1e-3, theta_z=1e-3, mass=mass,
                            r_long=radius, r_short=radius,
                            theta_phi_x=1e-7, theta_phi_y=1e-7,
                            theta_psi_x=1e-7, theta_psi_z=1e-7,
                            theta_g_x=5e-4, theta_g_z=theta_g_z,
                            tau_fcrit=10.0, rho_f=0.05)
        prof = ActuatorProfile(ConstantProfile(0.0), ConstantProfile(0.0),
                               ConstantProfile(rho_rate))
        init = SimState(attitude=AttitudeState(0.0, math.pi / 2, 0.0))
        log = simulate(init, prof, p, t_end=1.0, dt=2e-4, sample_every=5000)
        final = log.samples[-1].state.attitude
        expected_rate = 0.01 / (theta_g_z * rho_rate)
        assert final.alpha_v == pytest.approx(expected_rate * 1.0, rel=0.05)
        assert abs(final.beta_v - math.pi / 2) < 0.05


class TestStepRK4:
    def test_fixed_point_state_unchanged(self, desk_params):
        out = step_rk4(SimState(), static_profile(), desk_params, dt=1e-3)
        assert out.time == pytest.approx(1e-3)
        assert_allclose(out.pack(), SimState().pack(), atol=0)

    def test_dt_must_be_positive(self, desk_params):
        with pytest.raises(ValueError):
            step_rk4(SimState(), static_profile(), desk_params, dt=0.0)

    def test_free_top_energy_drift(self):
        # free rotation: kinetic energy drift < 1e-8 relative over 1 s at dt=1e-4
        p = asym_params()
        chain = dyn.frame_chain_from_params(p)
        init = SimState(attitude=AttitudeState(0.4, 0.9, 0.6),
                        omega=np.array([1.0, -0.7, 1.3]))
        log = simulate(init, static_profile(), p, t_end=1.0, dt=1e-4, sample_every=500,
                       gravity=False, friction=False)

        def energy(sample):
            theta, _ = dyn.factorize_tmec(chain, sample.state.chain)
            w = sample.state.omega
            return 0.5 * w @ theta @ w

        e = [energy(s) for s in log.samples]
        assert (max(e) - min(e)) / e[0] < 1e-8

    def test_order_four_convergence(self):
        # halving dt cuts the error ~16x on a smooth torque-free run
        p = asym_params()
        init = SimState(attitude=AttitudeState(0.4, 0.9, 0.6),
                        omega=np.array([3.0, -2.0, 2.5]))

        def run(dt):
            return final_state_vector(simulate(init, static_profile(), p, t_end=1.0,
                                               dt=dt, sample_every=10 ** 9,
                                               gravity=False, friction=False))

        y1, y2, y3 = run(4e-3), run(2e-3), run(1e-3)
        order = math.log2(np.linalg.norm(y1 - y2) / np.linalg.norm(y2 - y3))
        assert order == pytest.approx(4.0, abs=0.2)


class TestSimulate:
    def test_zero_horizon_logs_initial_only(self, desk_params):
        log = simulate(SimState(), static_profile(), desk_params, t_end=0.0, dt=1e-3)
        assert len(log.samples) == 1
        assert log.samples[0].time == 0.0

    def test_sample_count_contract(self, desk_params):
        log = simulate(SimState(attitude=AttitudeState(0.0, 1.0, 0.0)),
                       static_profile(), desk_params,
                       t_end=0.05, dt=1e-4, sample_every=100)
        assert len(log.samples) == 6  # initial + 5 centennial steps

    def test_sphere_pure_roll_arc_length(self):
        # dynamics keeps a spinning spherical shell rolling along a line
        p = sphere_params(radius=0.7)
        w, t_end = 1.0, 2.0
        init = SimState(attitude=AttitudeState(0.0, 0.5, 0.0),
                        omega=dyn.omega_from_euler_rates(0.0, w, 0.0, 0.5, 0.0))
        log = simulate(init, static_profile(), p, t_end=t_end, dt=1e-4, sample_every=100,
                       gravity=False, friction=True)
        track = np.array([[s.state.track.x_p, s.state.track.y_p] for s in log.samples])
        arc = np.sum(np.hypot(*np.diff(track, axis=0).T))
        assert arc == pytest.approx(0.7 * w * t_end, rel=1e-6)
        heights = [s.state.track.cz for s in log.samples]
        assert max(heights) - min(heights) < 1e-12

    def test_rerun_is_byte_identical(self, desk_params):
        from eggsim.cli import write_trajectory_csv
        prof = ActuatorProfile(SinusoidProfile(0.2, 1.0), ConstantProfile(0.05),
                               ConstantProfile(80.0))
        init = SimState(attitude=AttitudeState(0.1, 1.2, -0.2),
                        omega=np.array([0.4, 0.2, -0.6]))

        def run(tmp):
            log = simulate(init, prof, desk_params, t_end=0.2, dt=1e-3, sample_every=10)
            return write_trajectory_csv(log, tmp)

        import tempfile, os
        with tempfile.TemporaryDirectory() as d:
            c1 = run(os.path.join(d, "a.csv"))
            c2 = run(os.path.join(d, "b.csv"))
            assert c1 == c2

    def test_non_finite_state_aborts_with_diagnostic(self, desk_params):
        init = SimState(attitude=AttitudeState(0.0, 1.0, 0.0),
                        omega=np.array([math.nan, 0.0, 0.0]))
        with pytest.raises(NonFiniteStateError, match="omega"):
            simulate(init, static_profile(), desk_params, t_end=0.01, dt=1e-3)

    def test_no_slip_track_closure(self):
        # rolling scenarios that maintain the rolling coupling dynamically:
        # integral of the rolling heading rate tracks the attitude heading
        p = sphere_params(radius=0.06, theta=1e-4)
        w = 3.0
        init = SimState(attitude=AttitudeState(0.0, math.pi / 2, 0.0),
                        omega=np.array([0.0, 0.0, w]))  # log roll about the long axis
        log = simulate(init, static_profile(), p, t_end=10.0, dt=1e-3, sample_every=1,
                       gravity=False, friction=True)
        assert all(s.state.slip.gamma_slip_rate == 0.0 for s in log.samples)
        assert all(s.state.friction_mode == "stiction" for s in log.samples)
        # trapezoid integral of gamma_v_rate * cos(beta_v) + slip
        t = np.array([s.time for s in log.samples])
        rate = np.array([s.state.attitude.gamma_v_rate * math.cos(s.state.attitude.beta_v)
                         + s.state.slip.gamma_slip_rate for s in log.samples])
        heading_rolling = np.concatenate(([0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(t))))
        heading_attitude = np.unwrap([s.state.attitude.alpha_v for s in log.samples])
        assert np.max(np.abs(heading_rolling - (heading_attitude - heading_attitude[0]))) < 1e-6

    def test_mode_switch_and_hysteresis(self):
        # gyro spin-up reaction sweeps the twist load through the threshold
        p = dyn.RobotParams(theta_xy=0.01, theta_z=0.01, mass=0.5,
                            r_long=0.08, r_short=0.05,
                            theta_phi_x=1e-5, theta_phi_y=1e-5,
                            theta_psi_x=1e-5, theta_psi_z=1e-5,
                            theta_g_x=5e-4, theta_g_z=1e-3,
                            tau_fcrit=0.15, rho_f=2.0)
        prof = ActuatorProfile(ConstantProfile(0.0), ConstantProfile(0.0),
                               SinusoidProfile(amplitude=100.0, frequency=0.5,
                                               phase=-math.pi / 2, offset=100.0))
        init = SimState()  # upright rest
        log = simulate(init, prof, p, t_end=2.0, dt=1e-3, sample_every=1,
                       gravity=False, friction=True)
        modes = [s.state.friction_mode for s in log.samples]
        assert modes[0] == "stiction" and "stokes" in modes
        for s in log.samples:
            if s.state.friction_mode == "stiction":
                assert abs(s.torques.t_f_scalar) <= p.tau_fcrit + 1e-12
                assert s.state.slip.gamma_slip_rate == 0.0
        # hysteresis: regime stays stokes while the load dips below the
        # threshold but the slip has not died down
        held = [s for s in log.samples
                if s.state.friction_mode == "stokes"
                and abs(s.torques.t_f_scalar) <= p.tau_fcrit
                and abs(s.state.slip.gamma_slip_rate) >= 1e-8]
        assert held
        slip_peak = max(abs(s.state.slip.gamma_slip_rate) for s in log.samples)
        assert slip_peak > 0.01
        assert abs(log.samples[-1].state.slip.gamma_slip_rate) < 0.01 * slip_peak

    def test_stokes_reengages_stiction_once_slip_dies(self):
        p = dyn.RobotParams(theta_xy=0.01, theta_z=0.01, mass=0.5,
                            r_long=0.08, r_short=0.05,
                            theta_phi_x=1e-5, theta_phi_y=1e-5,
                            theta_psi_x=1e-5, theta_psi_z=1e-5,
                            theta_g_x=5e-4, theta_g_z=1e-3,
                            tau_fcrit=0.15, rho_f=2.0)
        init = SimState(friction_mode=dyn.STOKES)
        init.slip.gamma_slip_rate = 5e-9  # below the re-engage tolerance
        out = step_rk4(init, static_profile(), p, dt=1e-3)
        assert out.friction_mode == dyn.STICTION
        assert out.slip.gamma_slip_rate == 0.0
