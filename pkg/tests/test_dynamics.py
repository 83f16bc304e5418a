import dataclasses
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from eggsim import dynamics as dyn
from eggsim.errors import DegenerateInertiaError, GimbalLockError
from eggsim.geometry import EllipsoidShape, local_from_global
from eggsim.kinematics import AttitudeState, SlipState
from eggsim.symbolic import evaluate, expand_B, expand_L
from eggsim.validation import chain_bindings, random_chain_state, random_robot_params

SHAPE21 = EllipsoidShape(2.0, 1.0)


def unit_params(**overrides):
    base = dict(theta_xy=1.0, theta_z=1.0, mass=1.0, r_long=2.0, r_short=1.0,
                theta_phi_x=1.0, theta_phi_y=1.0, theta_psi_x=1.0, theta_psi_z=1.0,
                theta_g_x=1.0, theta_g_z=1.0, tau_fcrit=0.1, rho_f=0.05)
    base.update(overrides)
    return dyn.RobotParams(**base)


class TestChainOmegas:
    def test_identity_rotations_pass_omega_through(self):
        chain = dyn.frame_chain_from_params(unit_params())
        omega = np.array([0.4, -0.2, 0.9])
        state = dyn.ChainState(omega=omega)
        for w in dyn.chain_omegas(chain, state):
            assert_allclose(w, omega, atol=0)

    def test_spinning_gyro_only(self):
        chain = dyn.frame_chain_from_params(unit_params())
        state = dyn.ChainState(rho_rate=3.5)
        omegas = dyn.chain_omegas(chain, state)
        assert_allclose(omegas[3], [0, 0, 3.5], atol=0)
        assert_allclose(omegas[0], np.zeros(3), atol=0)

    def test_z_spin_invariant_under_outer_gimbal_angle(self):
        chain = dyn.frame_chain_from_params(unit_params())
        state = dyn.ChainState(phi=1.234, omega=np.array([0.0, 0.0, 2.0]))
        omegas = dyn.chain_omegas(chain, state)
        assert_allclose(omegas[1], [0, 0, 2.0], atol=1e-15)


class TestAngularMomentum:
    def test_single_spinning_gyro(self):
        p = unit_params(theta_g_z=0.37)
        chain = dyn.frame_chain_from_params(p)
        state = dyn.ChainState(rho_rate=5.0)
        assert_allclose(dyn.total_angular_momentum(chain, state),
                        [0, 0, 0.37 * 5.0], atol=1e-15)

    def test_symmetric_tensors_collapse_to_sum(self, rng):
        # theta_psi + theta_g balanced across x/z, spherical gimbal tensors
        p = unit_params(theta_xy=0.8, theta_z=0.5, theta_phi_x=0.25, theta_phi_y=0.25,
                        theta_psi_x=0.4, theta_psi_z=0.2, theta_g_x=0.3, theta_g_z=0.5)
        chain = dyn.frame_chain_from_params(p)
        combined = sum((f.inertia for f in chain.frames), np.zeros((3, 3)))
        for _ in range(20):
            omega = rng.uniform(-2, 2, size=3)
            state = dyn.ChainState(phi=rng.uniform(-3, 3), psi=rng.uniform(-3, 3),
                                   rho=rng.uniform(-3, 3), omega=omega)
            assert_allclose(dyn.total_angular_momentum(chain, state),
                            combined @ omega, atol=1e-13)

    def test_matches_expanded_terms(self, rng):
        expansion = expand_L()
        worst = 0.0
        for _ in range(300):
            params = random_robot_params(rng)
            chain = dyn.frame_chain_from_params(params)
            state = random_chain_state(rng)
            ref = dyn.total_angular_momentum(chain, state)
            got = evaluate(expansion, chain_bindings(chain, state))
            worst = max(worst, np.max(np.abs(got - ref)) / np.max(np.abs(ref)))
        assert worst < 1e-12


class TestMechanicalTorque:
    def test_static_chain_gives_zero(self):
        chain = dyn.frame_chain_from_params(unit_params())
        state = dyn.ChainState(phi=0.5, psi=-0.3, rho=2.0)
        assert_allclose(dyn.mechanical_torque(chain, state), np.zeros(3), atol=0)

    def test_gyro_spinup_reaction(self):
        p = unit_params(theta_g_z=0.2)
        chain = dyn.frame_chain_from_params(p)
        state = dyn.ChainState(rho_accel=4.0)
        assert_allclose(dyn.mechanical_torque(chain, state), [0, 0, 0.2 * 4.0], atol=1e-15)

    def test_matches_expanded_bias_terms(self, rng):
        expansion = expand_B()
        worst = 0.0
        for _ in range(300):
            params = random_robot_params(rng)
            chain = dyn.frame_chain_from_params(params)
            state = dataclasses.replace(random_chain_state(rng), omega_dot=np.zeros(3))
            ref = dyn.mechanical_torque(chain, state)
            got = evaluate(expansion, chain_bindings(chain, state))
            worst = max(worst, np.max(np.abs(got - ref)) / max(np.max(np.abs(ref)), 1e-30))
        assert worst < 1e-12


class TestFactorization:
    def test_affine_in_omega_dot(self, rng):
        for _ in range(100):
            params = random_robot_params(rng)
            chain = dyn.frame_chain_from_params(params)
            state = random_chain_state(rng)
            theta_com, b = dyn.factorize_tmec(chain, state)
            wd1, wd2 = rng.uniform(-2, 2, size=(2, 3))
            t1 = dyn.mechanical_torque(chain, dataclasses.replace(state, omega_dot=wd1))
            t2 = dyn.mechanical_torque(chain, dataclasses.replace(state, omega_dot=wd2))
            assert_allclose(t1 - t2, theta_com @ (wd1 - wd2), atol=1e-12 * max(1, np.abs(t1).max()))
            assert_allclose(t1, theta_com @ wd1 + b, atol=1e-12 * max(1, np.abs(t1).max()))

    def test_symmetry_condition_gives_plain_sum(self, rng):
        # balanced inner tensors and a z-invariant outer ring
        p = unit_params(theta_phi_x=0.25, theta_phi_y=0.25,
                        theta_psi_x=0.4, theta_psi_z=0.2, theta_g_x=0.3, theta_g_z=0.5)
        chain = dyn.frame_chain_from_params(p)
        expected = sum((f.inertia for f in chain.frames), np.zeros((3, 3)))
        for _ in range(50):
            state = dyn.ChainState(phi=rng.uniform(-3, 3), psi=rng.uniform(-3, 3),
                                   rho=rng.uniform(-3, 3))
            theta_com, _ = dyn.factorize_tmec(chain, state)
            assert_allclose(theta_com, expected, atol=1e-13)

    def test_zero_rates_zero_bias(self):
        chain = dyn.frame_chain_from_params(unit_params())
        state = dyn.ChainState(phi=0.9, psi=0.4, rho=-1.2, omega=np.array([1.0, 2.0, 3.0]))
        _, b = dyn.factorize_tmec(chain, state)
        assert_allclose(b, np.zeros(3), atol=0)

    def test_bias_is_tmec_at_zero_accel(self, rng):
        params = random_robot_params(rng)
        chain = dyn.frame_chain_from_params(params)
        state = random_chain_state(rng)
        _, b = dyn.factorize_tmec(chain, state)
        t0 = dyn.mechanical_torque(chain, dataclasses.replace(state, omega_dot=np.zeros(3)))
        assert_allclose(b, t0, atol=0)

    def test_singular_inertia_reported(self):
        chain = dyn.frame_chain_from_params(unit_params())
        att = AttitudeState(beta_v=0.5)
        state = dyn.ChainState()
        singular = np.zeros((3, 3))
        with pytest.raises(DegenerateInertiaError):
            dyn._solve3(singular, np.ones(3))


class TestGravityTorque:
    def test_upright_equilibrium(self):
        t = dyn.gravity_torque(AttitudeState(beta_v=0.0), SHAPE21, 1.0)
        assert_allclose(t, np.zeros(3), atol=1e-15)

    def test_lying_sphere(self):
        sphere = EllipsoidShape(0.4, 0.4)
        t = dyn.gravity_torque(AttitudeState(beta_v=math.pi / 2), sphere, 2.5)
        assert np.linalg.norm(t) == pytest.approx(9.81 * 2.5 * 0.4, rel=1e-12)

    def test_frozen_example(self):
        # |r(beta_p)| = 1.8439088914585775 at beta_v = 45 deg, shape (2, 1)
        att = AttitudeState(beta_v=math.radians(45.0))
        t = dyn.gravity_torque(att, SHAPE21, 1.0)
        assert np.linalg.norm(t) == pytest.approx(12.790675119007597, rel=1e-12)

    def test_direction_perpendicular_by_construction(self, rng):
        for _ in range(50):
            att = AttitudeState(alpha_v=rng.uniform(-3, 3),
                                beta_v=rng.uniform(0.05, math.pi - 0.05),
                                gamma_v=rng.uniform(-3, 3))
            t = dyn.gravity_torque(att, SHAPE21, 1.3)
            k = dyn.body_vertical(att)
            # support point of the ellipsoid in the downhill direction
            contact_dir = -np.array([SHAPE21.r2 ** 2 * k[0], SHAPE21.r2 ** 2 * k[1],
                                     SHAPE21.r1 ** 2 * k[2]])
            contact_dir /= np.linalg.norm(contact_dir)
            scale = max(np.linalg.norm(t), 1e-30)
            assert abs(np.dot(t, k)) / scale < 1e-9
            assert abs(np.dot(t, contact_dir)) / scale < 1e-9


class TestVirtualTorque:
    def test_parallel_vanishes(self):
        w = np.array([1.0, -2.0, 0.5])
        assert_allclose(dyn.virtual_torque(w, 3.0 * w), np.zeros(3), atol=1e-15)

    def test_cross_example(self):
        assert_allclose(dyn.virtual_torque(np.array([0, 0, 2.0]), np.array([0.7, 0, 0])),
                        [0, 1.4, 0], atol=1e-15)

    def test_antisymmetry(self, rng):
        a, b = rng.uniform(-2, 2, size=(2, 3))
        assert_allclose(dyn.virtual_torque(a, b), -dyn.virtual_torque(b, a), atol=1e-15)


class TestFrictionTorque:
    def test_zero_vertical_load_zero_friction(self):
        p = unit_params()
        att = AttitudeState(alpha_v=0.3, beta_v=0.8, gamma_v=-0.5)
        k = dyn.body_vertical(att)
        total = np.cross(k, np.array([1.0, 0.0, 0.0]))  # perpendicular to vertical
        vec, mode = dyn.friction_torque(total, att, SlipState(0.0), p)
        assert mode == dyn.STICTION
        assert_allclose(vec, np.zeros(3), atol=1e-15)

    def test_stiction_cancels_world_z_exactly(self, rng):
        p = unit_params(tau_fcrit=100.0)
        for _ in range(50):
            att = AttitudeState(alpha_v=rng.uniform(-3, 3), beta_v=rng.uniform(0, math.pi),
                                gamma_v=rng.uniform(-3, 3))
            total = rng.uniform(-5, 5, size=3)
            vec, mode = dyn.friction_torque(total, att, SlipState(0.0), p)
            assert mode == dyn.STICTION
            assert dyn.twist_load(total + vec, att) == pytest.approx(0.0, abs=1e-12)

    def test_stokes_world_torque_frozen(self):
        p = unit_params(tau_fcrit=0.01, rho_f=0.05)
        att = AttitudeState(alpha_v=0.7, beta_v=1.1, gamma_v=-0.3)
        vec, mode = dyn.friction_torque(np.array([5.0, -2.0, 1.0]), att, SlipState(2.0), p)
        assert mode == dyn.STOKES
        world = local_from_global(att.alpha_v, att.beta_v, att.gamma_v) @ vec
        assert_allclose(world, [0, 0, -0.1], atol=1e-15)

    def test_nonzero_slip_forces_stokes(self):
        p = unit_params(tau_fcrit=100.0)
        att = AttitudeState(beta_v=0.5)
        _, mode = dyn.friction_torque(np.zeros(3), att, SlipState(1e-3), p)
        assert mode == dyn.STOKES

    def test_load_above_threshold_switches(self):
        p = unit_params(tau_fcrit=0.1)
        att = AttitudeState(beta_v=0.0)  # vertical is the body z axis
        _, mode = dyn.friction_torque(np.array([0.0, 0.0, 0.2]), att, SlipState(0.0), p)
        assert mode == dyn.STOKES


class TestAngularAcceleration:
    def test_rest_without_torques(self):
        p = unit_params()
        chain = dyn.frame_chain_from_params(p)
        wd = dyn.angular_acceleration(dyn.ChainState(), AttitudeState(beta_v=0.0),
                                      SlipState(), chain, p, p.shape)
        assert_allclose(wd, np.zeros(3), atol=1e-15)

    def test_defining_equation_residual(self, rng):
        for _ in range(50):
            p = random_robot_params(rng)
            chain = dyn.frame_chain_from_params(p)
            state = random_chain_state(rng)
            att = AttitudeState(alpha_v=rng.uniform(-3, 3),
                                beta_v=rng.uniform(0.1, math.pi - 0.1),
                                gamma_v=rng.uniform(-3, 3))
            slip = SlipState(0.0)
            wd, torques = dyn.torque_balance(state, att, slip, chain, p, p.shape)
            theta_com, b = dyn.factorize_tmec(chain, state)
            rhs = (torques.t_gravity + torques.t_virtual + torques.t_friction - b)
            residual = theta_com @ wd - rhs
            assert np.max(np.abs(residual)) < 1e-10 * max(1.0, np.max(np.abs(rhs)))
            # realized mechanical torque equals Theta omega_dot + b
            assert_allclose(torques.t_mec, theta_com @ wd + b, atol=1e-12)

    def test_free_body_momentum_rate_is_transport_term(self, rng):
        # gravity and friction off: dL/dt in the body frame must equal L x omega
        p = random_robot_params(rng)
        chain = dyn.frame_chain_from_params(p)
        state = random_chain_state(rng)
        att = AttitudeState(beta_v=1.0)
        wd, _ = dyn.torque_balance(state, att, SlipState(), chain, p, p.shape,
                                   gravity=False, friction=False)
        L = dyn.total_angular_momentum(chain, state)
        ldot = dyn.mechanical_torque(chain, dataclasses.replace(state, omega_dot=wd))
        assert_allclose(ldot, np.cross(L, state.omega), atol=1e-10 * max(1, np.abs(L).max()))


class TestEulerRates:
    def test_spec_point(self):
        rates = dyn.euler_rates(np.array([1.0, 2.0, 3.0]), math.pi / 2, 0.0)
        assert rates == (2.0, 1.0, 3.0)

    def test_zero_omega(self):
        assert dyn.euler_rates(np.zeros(3), 1.0, 0.5) == (0.0, 0.0, 0.0)

    def test_round_trip_with_forward_map(self, rng):
        for _ in range(100):
            beta = rng.uniform(0.05, math.pi - 0.05)
            gamma = rng.uniform(-math.pi, math.pi)
            rates = rng.uniform(-2, 2, size=3)
            omega = dyn.omega_from_euler_rates(*rates, beta, gamma)
            back = dyn.euler_rates(omega, beta, gamma)
            assert_allclose(back, rates, atol=1e-12)

    def test_rotation_rate_finite_difference(self, rng):
        h = 1e-6
        for _ in range(100):
            angles = np.array([rng.uniform(-3, 3), rng.uniform(0.1, math.pi - 0.1),
                               rng.uniform(-3, 3)])
            omega = rng.uniform(-2, 2, size=3)
            rates = np.array(dyn.euler_rates(omega, angles[1], angles[2]))
            rp = local_from_global(*(angles + h * rates))
            rm = local_from_global(*(angles - h * rates))
            fd = (rp - rm) / (2 * h)
            skew = np.array([[0, -omega[2], omega[1]],
                             [omega[2], 0, -omega[0]],
                             [-omega[1], omega[0], 0]])
            analytic = local_from_global(*angles) @ skew
            assert np.max(np.abs(fd - analytic)) < 1e-6

    def test_gimbal_lock_raises(self):
        with pytest.raises(GimbalLockError):
            dyn.euler_rates(np.array([1.0, 0.0, 0.0]), 1e-9, 0.0)

    def test_regularized_is_bounded_near_lock(self, rng):
        for beta in (0.0, 1e-9, math.pi - 1e-9, math.pi):
            omega = rng.uniform(-2, 2, size=3)
            rates = dyn.euler_rates_regularized(omega, beta, 0.3)
            assert all(math.isfinite(r) for r in rates)
            assert abs(rates[0]) <= np.linalg.norm(omega) / 1e-6 + 1e-9

    def test_literal_form_documented_difference(self):
        # printed map lacks 1/sin(beta); rows agree only at beta = pi/2
        omega = np.array([0.3, -0.8, 1.1])
        lit = dyn.euler_rates_literal(omega, math.pi / 2, 0.2)
        inv = dyn.euler_rates(omega, math.pi / 2, 0.2)
        assert lit[0] == pytest.approx(inv[0], abs=1e-12)
        assert lit[1] == pytest.approx(inv[1], abs=1e-12)
        lit_tilted = dyn.euler_rates_literal(omega, 0.4, 0.2)
        inv_tilted = dyn.euler_rates(omega, 0.4, 0.2)
        assert abs(lit_tilted[0] - inv_tilted[0]) > 1e-3
