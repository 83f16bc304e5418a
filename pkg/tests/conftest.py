import numpy as np
import pytest

from eggsim.dynamics import RobotParams


@pytest.fixture
def rng():
    return np.random.default_rng(20250810)


@pytest.fixture
def desk_params():
    """Desk-scale egg robot used across the integration tests."""
    return RobotParams(theta_xy=0.02, theta_z=0.01, mass=1.0,
                       r_long=0.08, r_short=0.05,
                       theta_phi_x=2e-4, theta_phi_y=3e-4,
                       theta_psi_x=1e-4, theta_psi_z=2e-4,
                       theta_g_x=6e-5, theta_g_z=1e-4,
                       tau_fcrit=0.1, rho_f=0.05)
