"""Scenario configuration: flat key-value files with dotted section keys.

Format example::

    robot.mass = 1.0           # kg
    shape.r_long = 0.08        # m
    initial.beta_v = 90.0      # angles in degrees
    profile.mu1 = sinusoid amplitude=10 frequency=0.5 phase=0 offset=0
    profile.rho_rate = constant value=500
    run.t_end = 1.0
    output.path = trajectory.csv

Unit rules: every angle-valued entry (initial attitude, gyro angle, servo
profile parameters and phases) is in degrees and converted to radians once
when the scenario is built; angular velocities (initial omega, slip rate,
the gyro spin-rate profile) are in rad/s as-is.

The parsed object stores the raw file values, so parse -> serialize ->
parse is an exact fixed point; floats are emitted with 17 significant
digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import ChainState, RobotParams, STICTION, STOKES
from .errors import ConfigError
from .geometry import EllipsoidShape
from .integrator import (
    ActuatorProfile,
    ConstantProfile,
    RampProfile,
    SimState,
    SinusoidProfile,
    SplineProfile,
)
from .kinematics import AttitudeState, GroundTrack, SlipState, center_position

ROBOT_KEYS = ("theta_xy", "theta_z", "mass", "theta_phi_x", "theta_phi_y",
              "theta_psi_x", "theta_psi_z", "theta_g_x", "theta_g_z",
              "tau_fcrit", "rho_f")
SHAPE_KEYS = ("r_long", "r_short")
INITIAL_KEYS = ("alpha_v", "beta_v", "gamma_v", "omega_x", "omega_y", "omega_z",
                "gamma_slip_rate", "x_p", "y_p", "rho")
PROFILE_KEYS = ("mu1", "mu2", "rho_rate")
RUN_KEYS = ("t_end", "dt", "sample_every", "gravity", "friction")

_PROFILE_PARAMS = {
    "constant": ("value",),
    "ramp": ("start", "slope"),
    "sinusoid": ("amplitude", "frequency", "phase", "offset"),
}

_INITIAL_DEFAULTS = {k: 0.0 for k in INITIAL_KEYS}
_RUN_DEFAULTS = {"sample_every": 1, "gravity": True, "friction": True}

DEG = math.pi / 180.0


@dataclass(frozen=True)
class ProfileSpec:
    """One actuator time-function as written in the config."""

    kind: str
    params: tuple[tuple[str, float], ...] = ()
    points: tuple[tuple[float, float], ...] = ()

    def get(self, name: str) -> float:
        for k, v in self.params:
            if k == name:
                return v
        raise KeyError(name)


@dataclass(frozen=True)
class ScenarioConfig:
    """Raw scenario values exactly as parsed (angles still in degrees)."""

    robot: tuple[tuple[str, float], ...]
    shape: tuple[tuple[str, float], ...]
    initial: tuple[tuple[str, float], ...]
    profiles: tuple[tuple[str, ProfileSpec], ...]
    run: tuple[tuple[str, object], ...]
    output_path: str

    def robot_value(self, key: str) -> float:
        return dict(self.robot)[key]

    def run_value(self, key: str):
        return dict(self.run)[key]


def _parse_float(field_name: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(field_name, f"not a number: {raw!r}") from None


def _parse_bool(field_name: str, raw: str) -> bool:
    if raw.lower() in ("true", "1", "yes", "on"):
        return True
    if raw.lower() in ("false", "0", "no", "off"):
        return False
    raise ConfigError(field_name, f"not a boolean: {raw!r}")


def _parse_profile(field_name: str, raw: str) -> ProfileSpec:
    tokens = raw.split()
    if not tokens:
        raise ConfigError(field_name, "empty profile specification")
    kind = tokens[0]
    kv = {}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise ConfigError(field_name, f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        kv[k] = v

    if kind == "spline":
        if set(kv) != {"points"}:
            raise ConfigError(field_name, "spline takes exactly points=t:v,t:v,...")
        points = []
        for pair in kv["points"].split(","):
            if ":" not in pair:
                raise ConfigError(field_name, f"bad spline point {pair!r}")
            t, v = pair.split(":", 1)
            points.append((_parse_float(field_name, t), _parse_float(field_name, v)))
        if len(points) < 2:
            raise ConfigError(field_name, "spline needs at least 2 points")
        return ProfileSpec("spline", points=tuple(points))

    if kind not in _PROFILE_PARAMS:
        raise ConfigError(field_name, f"unknown profile kind {kind!r}")
    names = _PROFILE_PARAMS[kind]
    unknown = set(kv) - set(names)
    if unknown:
        raise ConfigError(field_name, f"unknown profile parameter(s) {sorted(unknown)}")
    params = []
    for name in names:
        if name in kv:
            params.append((name, _parse_float(f"{field_name}.{name}", kv[name])))
        elif name in ("phase", "offset"):
            params.append((name, 0.0))
        else:
            raise ConfigError(field_name, f"missing profile parameter {name!r}")
    return ProfileSpec(kind, params=tuple(params))


def parse_config(text: str) -> ScenarioConfig:
    """Parse a scenario; raises ConfigError naming the offending field."""
    seen: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {stripped!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key in seen:
            raise ConfigError(key, "duplicate key")
        seen[key] = value

    def take(section: str, name: str, required: bool = True, default=None) -> str | None:
        full = f"{section}.{name}"
        if full in seen:
            return seen.pop(full)
        if required:
            raise ConfigError(full, f"missing required field: {name}")
        return default

    robot = tuple((k, _parse_float(f"robot.{k}", take("robot", k))) for k in ROBOT_KEYS)
    shape = tuple((k, _parse_float(f"shape.{k}", take("shape", k))) for k in SHAPE_KEYS)
    initial = tuple(
        (k, _parse_float(f"initial.{k}", raw) if (raw := take("initial", k, required=False)) is not None
         else _INITIAL_DEFAULTS[k])
        for k in INITIAL_KEYS)
    profiles = tuple(
        (k, _parse_profile(f"profile.{k}", raw) if (raw := take("profile", k, required=False)) is not None
         else ProfileSpec("constant", params=(("value", 0.0),)))
        for k in PROFILE_KEYS)

    run_items: list[tuple[str, object]] = []
    run_items.append(("t_end", _parse_float("run.t_end", take("run", "t_end"))))
    run_items.append(("dt", _parse_float("run.dt", take("run", "dt"))))
    raw = take("run", "sample_every", required=False)
    if raw is None:
        run_items.append(("sample_every", _RUN_DEFAULTS["sample_every"]))
    else:
        try:
            run_items.append(("sample_every", int(raw)))
        except ValueError:
            raise ConfigError("run.sample_every", f"not an integer: {raw!r}") from None
    for k in ("gravity", "friction"):
        raw = take("run", k, required=False)
        run_items.append((k, _RUN_DEFAULTS[k] if raw is None else _parse_bool(f"run.{k}", raw)))

    output_path = take("output", "path", required=False, default="trajectory.csv")

    if seen:
        raise ConfigError(sorted(seen)[0], "unknown key")

    cfg = ScenarioConfig(robot=robot, shape=shape, initial=initial,
                         profiles=profiles, run=tuple(run_items),
                         output_path=output_path)
    _validate(cfg)
    return cfg


def parse_config_file(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())


def _validate(cfg: ScenarioConfig) -> None:
    robot = dict(cfg.robot)
    for k in ("theta_xy", "theta_z", "mass", "theta_phi_x", "theta_phi_y",
              "theta_psi_x", "theta_psi_z", "theta_g_x", "theta_g_z"):
        if robot[k] <= 0.0:
            raise ConfigError(f"robot.{k}", "must be > 0")
    for k in ("tau_fcrit", "rho_f"):
        if robot[k] < 0.0:
            raise ConfigError(f"robot.{k}", "must be >= 0")
    shape = dict(cfg.shape)
    if not (shape["r_long"] >= shape["r_short"] > 0.0):
        raise ConfigError("shape.r_long", "need r_long >= r_short > 0")
    initial = dict(cfg.initial)
    if not (0.0 <= initial["beta_v"] <= 180.0):
        raise ConfigError("initial.beta_v", "must lie in [0, 180] degrees")
    run = dict(cfg.run)
    if run["t_end"] < 0.0:
        raise ConfigError("run.t_end", "must be >= 0")
    if run["dt"] <= 0.0:
        raise ConfigError("run.dt", "must be > 0")
    if run["sample_every"] < 1:
        raise ConfigError("run.sample_every", "must be >= 1")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return format(value, ".17g")


def _fmt_profile(spec: ProfileSpec) -> str:
    if spec.kind == "spline":
        pts = ",".join(f"{_fmt(t)}:{_fmt(v)}" for t, v in spec.points)
        return f"spline points={pts}"
    parts = [spec.kind] + [f"{k}={_fmt(v)}" for k, v in spec.params]
    return " ".join(parts)


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical text form; parse(serialize(cfg)) == cfg exactly."""
    lines = []
    for k, v in cfg.robot:
        lines.append(f"robot.{k} = {_fmt(v)}")
    for k, v in cfg.shape:
        lines.append(f"shape.{k} = {_fmt(v)}")
    for k, v in cfg.initial:
        lines.append(f"initial.{k} = {_fmt(v)}")
    for k, spec in cfg.profiles:
        lines.append(f"profile.{k} = {_fmt_profile(spec)}")
    for k, v in cfg.run:
        lines.append(f"run.{k} = {_fmt(v)}")
    lines.append(f"output.path = {cfg.output_path}")
    return "\n".join(lines) + "\n"


def _build_time_function(spec: ProfileSpec, angular: bool):
    """Instantiate a profile primitive; angle-valued ones convert deg -> rad."""
    scale = DEG if angular else 1.0
    if spec.kind == "constant":
        return ConstantProfile(scale * spec.get("value"))
    if spec.kind == "ramp":
        return RampProfile(scale * spec.get("start"), scale * spec.get("slope"))
    if spec.kind == "sinusoid":
        return SinusoidProfile(amplitude=scale * spec.get("amplitude"),
                               frequency=spec.get("frequency"),
                               phase=DEG * spec.get("phase"),
                               offset=scale * spec.get("offset"))
    if spec.kind == "spline":
        times = [t for t, _ in spec.points]
        values = [scale * v for _, v in spec.points]
        return SplineProfile(times, values)
    raise ConfigError("profile", f"unknown kind {spec.kind!r}")


@dataclass
class Scenario:
    """Built simulation inputs, ready to run."""

    params: RobotParams
    shape: EllipsoidShape
    initial: SimState
    profile: ActuatorProfile
    t_end: float
    dt: float
    sample_every: int
    gravity: bool
    friction: bool
    output_path: str


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    """Convert raw config values into simulation objects (degrees -> radians)."""
    robot = dict(cfg.robot)
    shape_vals = dict(cfg.shape)
    try:
        params = RobotParams(r_long=shape_vals["r_long"], r_short=shape_vals["r_short"],
                             **robot)
    except ValueError as e:
        raise ConfigError("robot", str(e)) from None
    shape = params.shape

    init = dict(cfg.initial)
    att = AttitudeState(alpha_v=DEG * init["alpha_v"], beta_v=DEG * init["beta_v"],
                        gamma_v=DEG * init["gamma_v"])
    omega = np.array([init["omega_x"], init["omega_y"], init["omega_z"]])
    cx, cy, cz = center_position(init["x_p"], init["y_p"], att.beta_v, att.alpha_v, shape)
    slip_rate = init["gamma_slip_rate"]
    state = SimState(
        attitude=att, omega=omega,
        slip=SlipState(slip_rate),
        track=GroundTrack(x_p=init["x_p"], y_p=init["y_p"], cx=cx, cy=cy, cz=cz),
        chain=ChainState(rho=DEG * init["rho"], omega=omega.copy()),
        friction_mode=STICTION if slip_rate == 0.0 else STOKES, time=0.0)

    profs = dict(cfg.profiles)
    profile = ActuatorProfile(
        mu1=_build_time_function(profs["mu1"], angular=True),
        mu2=_build_time_function(profs["mu2"], angular=True),
        rho_rate=_build_time_function(profs["rho_rate"], angular=False))
    run = dict(cfg.run)
    try:
        profile.check_consistency(run["t_end"])
    except ValueError as e:
        raise ConfigError("profile", str(e)) from None

    return Scenario(params=params, shape=shape, initial=state, profile=profile,
                    t_end=run["t_end"], dt=run["dt"], sample_every=run["sample_every"],
                    gravity=run["gravity"], friction=run["friction"],
                    output_path=cfg.output_path)
