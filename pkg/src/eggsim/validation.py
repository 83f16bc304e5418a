"""Self-validation suites: golden-structure, numeric equivalence, conservation.

Each check returns a :class:`CheckResult`; the CLI renders one line per check
and the test suite asserts on them.  The brute-force contact oracle lives
here so both the geometry tests and the contact-curve acceptance share it.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass

import numpy as np

from . import dynamics as dyn
from . import symbolic as sym
from .geometry import EllipsoidShape, local_from_global
from .integrator import SimState, simulate, static_profile
from .kinematics import AttitudeState


# ---------------------------------------------------------------------------
# random-state helpers (shared with the test suite)
# ---------------------------------------------------------------------------

def random_robot_params(rng: np.random.Generator) -> dyn.RobotParams:
    v = rng.uniform(0.05, 2.0, size=9)
    return dyn.RobotParams(theta_xy=v[0], theta_z=v[1], mass=rng.uniform(0.2, 3.0),
                           r_long=2.0, r_short=1.0,
                           theta_phi_x=v[2], theta_phi_y=v[3],
                           theta_psi_x=v[4], theta_psi_z=v[5],
                           theta_g_x=v[6], theta_g_z=v[7],
                           tau_fcrit=0.1, rho_f=0.05)


def random_chain_state(rng: np.random.Generator) -> dyn.ChainState:
    a = rng.uniform(-math.pi, math.pi, size=3)
    r = rng.uniform(-2.0, 2.0, size=6)
    return dyn.ChainState(phi=a[0], psi=a[1], rho=a[2],
                          phi_rate=r[0], psi_rate=r[1], rho_rate=r[2],
                          phi_accel=r[3], psi_accel=r[4], rho_accel=r[5],
                          omega=rng.uniform(-2.0, 2.0, size=3),
                          omega_dot=rng.uniform(-2.0, 2.0, size=3))


def chain_bindings(chain: dyn.FrameChain, state: dyn.ChainState) -> dict:
    """Symbolic bindings matching a chain state (standard axis assignment)."""
    return sym.standard_bindings(state.phi, state.psi, state.rho,
                                 state.phi_rate, state.psi_rate, state.rho_rate,
                                 state.phi_accel, state.psi_accel, state.rho_accel,
                                 [f.inertia for f in chain.frames],
                                 state.omega, state.omega_dot)


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-30)
    return float(np.max(np.abs(a - b))) / scale


# ---------------------------------------------------------------------------
# brute-force contact oracle
# ---------------------------------------------------------------------------

def golden_section_min(f, a: float, b: float, tol: float = 1e-10) -> float:
    """Arg-min of a unimodal scalar function on [a, b]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def beta_p_bruteforce(shape: EllipsoidShape, beta_v: float,
                      grid_n: int = 10_000) -> float:
    """Contact angle by minimizing the world height of the surface meridian.

    The meridian point at angle ``beta_s`` from the long axis sits, for an
    inclination ``beta_v`` (tilt sense putting the contact on the +y side),
    at world height ``-|r(beta_s)| cos(beta_s - beta_v)`` relative to the
    center.  A dense grid bracket is refined by golden-section search.
    """
    r1, r2 = shape.r1, shape.r2

    def height(beta_s):
        rr = r1 * r2 / np.sqrt((r1 * np.sin(beta_s)) ** 2 + (r2 * np.cos(beta_s)) ** 2)
        return -rr * np.cos(beta_s - beta_v)

    grid = np.linspace(0.0, math.pi, grid_n)
    i = int(np.argmin(height(grid)))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid_n - 1)]
    return golden_section_min(lambda b: float(height(b)), lo, hi)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    max_err: float
    tolerance: float
    detail: str
    seconds: float


def _golden(name: str, golden_dir):
    if golden_dir is None:
        return sym.load_golden(name)
    return sym.load_golden_file(f"{golden_dir}/{name}_terms.txt")


def check_appendix_a_structure(golden_dir=None, **_) -> CheckResult:
    t0 = time.perf_counter()
    expanded = sym.expand_L()
    golden = _golden("L", golden_dir)
    ok = expanded == golden and len(expanded) == 10
    return CheckResult("appendix_a_structure", ok, 0.0 if ok else 1.0, 0.0,
                       f"{len(expanded)} expanded terms vs {len(golden)} golden",
                       time.perf_counter() - t0)


def check_appendix_b_structure(golden_dir=None, **_) -> CheckResult:
    t0 = time.perf_counter()
    expanded = sym.expand_B()
    golden = _golden("B", golden_dir)
    ok = expanded == golden
    return CheckResult("appendix_b_structure", ok, 0.0 if ok else 1.0, 0.0,
                       f"{len(expanded)} expanded terms vs {len(golden)} golden",
                       time.perf_counter() - t0)


def _numeric_equivalence(expansion, recursive_fn, n_states: int, seed: int) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(n_states):
        params = random_robot_params(rng)
        chain = dyn.frame_chain_from_params(params)
        state = random_chain_state(rng)
        binds = chain_bindings(chain, state)
        worst = max(worst, _rel_err(recursive_fn(chain, state), sym.evaluate(expansion, binds)))
    return worst, time.perf_counter() - t0


def check_appendix_a_numeric(n_states: int = 1000, seed: int = 1, **_) -> CheckResult:
    worst, elapsed = _numeric_equivalence(sym.expand_L(), dyn.total_angular_momentum,
                                          n_states, seed)
    return CheckResult("appendix_a_numeric", worst <= 1e-12, worst, 1e-12,
                       f"{n_states} random states, recursion vs expansion", elapsed)


def check_appendix_b_numeric(n_states: int = 1000, seed: int = 2, **_) -> CheckResult:
    def tmec_no_accel(chain, state):
        state = dataclasses.replace(state, omega_dot=np.zeros(3))
        return dyn.mechanical_torque(chain, state)

    worst, elapsed = _numeric_equivalence(sym.expand_B(), tmec_no_accel, n_states, seed)
    return CheckResult("appendix_b_numeric", worst <= 1e-12, worst, 1e-12,
                       f"{n_states} random states, zero shell acceleration", elapsed)


def check_tmec_affine(n_states: int = 200, seed: int = 3, **_) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(n_states):
        params = random_robot_params(rng)
        chain = dyn.frame_chain_from_params(params)
        state = random_chain_state(rng)
        theta_com, b = dyn.factorize_tmec(chain, state)
        for _ in range(3):
            wd = rng.uniform(-2.0, 2.0, size=3)
            t = dyn.mechanical_torque(chain, dataclasses.replace(state, omega_dot=wd))
            worst = max(worst, _rel_err(t, theta_com @ wd + b))
    return CheckResult("tmec_affine", worst <= 1e-12, worst, 1e-12,
                       f"{n_states} states x 3 accelerations", time.perf_counter() - t0)


def check_theta_com_symmetry(n_poses: int = 100, seed: int = 4, **_) -> CheckResult:
    """Under theta_psi+theta_g x/z balance and a z-invariant outer ring,
    Theta_com collapses to the plain tensor sum for every gimbal pose."""
    rng = np.random.default_rng(seed)
    params = dyn.RobotParams(theta_xy=0.8, theta_z=0.5, mass=1.0, r_long=2.0, r_short=1.0,
                             theta_phi_x=0.25, theta_phi_y=0.25,
                             theta_psi_x=0.4, theta_psi_z=0.2,
                             theta_g_x=0.3, theta_g_z=0.5,
                             tau_fcrit=0.1, rho_f=0.05)
    chain = dyn.frame_chain_from_params(params)
    plain_sum = sum((f.inertia for f in chain.frames), np.zeros((3, 3)))
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(n_poses):
        state = dyn.ChainState(phi=rng.uniform(-math.pi, math.pi),
                               psi=rng.uniform(-math.pi, math.pi),
                               rho=rng.uniform(-math.pi, math.pi))
        theta_com, _ = dyn.factorize_tmec(chain, state)
        worst = max(worst, _rel_err(theta_com, plain_sum))
    return CheckResult("theta_com_symmetry", worst <= 1e-12, worst, 1e-12,
                       f"{n_poses} random gimbal poses vs plain sum", time.perf_counter() - t0)


def check_contact_oracle(n_cases: int = 200, seed: int = 5, **_) -> CheckResult:
    from .geometry import contact_point

    rng = np.random.default_rng(seed)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(n_cases):
        r2 = rng.uniform(0.3, 1.5)
        shape = EllipsoidShape(r1=r2 * rng.uniform(1.0, 3.0), r2=r2)
        beta_v = rng.uniform(0.0, math.pi / 2)
        analytic = contact_point(beta_v, shape).beta_p
        oracle = beta_p_bruteforce(shape, beta_v)
        worst = max(worst, abs(analytic - oracle))
    return CheckResult("contact_oracle", worst <= 1e-6, worst, 1e-6,
                       f"{n_cases} random shapes/inclinations, grid+golden-section",
                       time.perf_counter() - t0)


def check_free_conservation(t_end: float = 10.0, dt: float = 1e-4, **_) -> CheckResult:
    """Free rotation (no gravity, no friction, frozen actuators) must keep the
    world-frame angular momentum vector constant."""
    params = dyn.RobotParams(theta_xy=0.02, theta_z=0.01, mass=1.0,
                             r_long=0.08, r_short=0.05,
                             theta_phi_x=2e-4, theta_phi_y=3e-4,
                             theta_psi_x=1e-4, theta_psi_z=2e-4,
                             theta_g_x=6e-5, theta_g_z=1e-4,
                             tau_fcrit=0.1, rho_f=0.05)
    chain = dyn.frame_chain_from_params(params)
    init = SimState(attitude=AttitudeState(alpha_v=0.3, beta_v=1.1, gamma_v=-0.4),
                    omega=np.array([1.0, -0.7, 1.3]))
    t0 = time.perf_counter()
    log = simulate(init, static_profile(), params, t_end=t_end, dt=dt,
                   sample_every=max(1, int(round(t_end / dt / 100))),
                   gravity=False, friction=False)

    def world_momentum(s):
        a = s.state.attitude
        return local_from_global(a.alpha_v, a.beta_v, a.gamma_v) \
            @ dyn.total_angular_momentum(chain, s.state.chain)

    ref = world_momentum(log.samples[0])
    scale = float(np.linalg.norm(ref))
    worst = max(float(np.linalg.norm(world_momentum(s) - ref)) / scale
                for s in log.samples)
    return CheckResult("free_conservation", worst <= 1e-6, worst, 1e-6,
                       f"{t_end:g} s at dt={dt:g}, world |dL|/|L|", time.perf_counter() - t0)


ALL_CHECKS = (
    check_appendix_a_structure,
    check_appendix_a_numeric,
    check_appendix_b_structure,
    check_appendix_b_numeric,
    check_tmec_affine,
    check_theta_com_symmetry,
    check_contact_oracle,
    check_free_conservation,
)


def run_validation(golden_dir=None, quick: bool = False) -> list[CheckResult]:
    """Run every check; ``quick`` shortens the statistical and time-domain runs."""
    kwargs = {"golden_dir": golden_dir}
    results = []
    for check in ALL_CHECKS:
        opts = dict(kwargs)
        if quick:
            if check is check_free_conservation:
                opts.update(t_end=2.0)
            elif check in (check_appendix_a_numeric, check_appendix_b_numeric):
                opts.update(n_states=100)
            elif check is check_contact_oracle:
                opts.update(n_cases=40)
        results.append(check(**opts))
    return results
