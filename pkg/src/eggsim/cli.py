"""Command-line front end.

Subcommands:

* ``simulate <config>...``: run scenarios, write trajectory CSVs (parallel
  across files, capped by the ``EGG_SIM_THREADS`` environment variable).
* ``contact-curve``: contact-angle vs inclination datasets per axis ratio.
* ``validate``: run the built-in validation suites.
* ``expand``: print a golden-comparable term expansion.

Exit codes: 0 success, 1 failed validation checks, 2 configuration errors,
3 numerical aborts.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .config import build_scenario, parse_config_file
from .errors import ConfigError, NonFiniteStateError
from .geometry import EllipsoidShape, contact_point
from .integrator import LOG_COLUMNS, TrajectoryLog, sample_row, simulate
from .symbolic import expand
from .validation import run_validation


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def write_trajectory_csv(log: TrajectoryLog, path: str) -> str:
    """Write the trajectory log; returns the sha256 of the written bytes."""
    lines = [",".join(LOG_COLUMNS)]
    for sample in log.samples:
        lines.append(",".join(_fmt(v) for v in sample_row(sample)))
    data = ("\n".join(lines) + "\n").encode("utf-8")
    with open(path, "wb") as f:
        f.write(data)
    return hashlib.sha256(data).hexdigest()


def _run_scenario(config_path: str, plot: bool):
    cfg = parse_config_file(config_path)
    scenario = build_scenario(cfg)
    log = simulate(scenario.initial, scenario.profile, scenario.params,
                   scenario.shape, t_end=scenario.t_end, dt=scenario.dt,
                   sample_every=scenario.sample_every,
                   gravity=scenario.gravity, friction=scenario.friction)
    checksum = write_trajectory_csv(log, scenario.output_path)
    if plot:
        from .plotting import save_trajectory_figure
        figure_path = os.path.splitext(scenario.output_path)[0] + ".png"
        save_trajectory_figure(log, figure_path, title=os.path.basename(config_path))
    else:
        figure_path = None

    beta = [s.state.attitude.beta_v for s in log.samples]
    max_omega = max(float(np.linalg.norm(s.state.omega)) for s in log.samples)
    lines = [
        f"scenario {config_path}:",
        f"  samples            {len(log.samples)}",
        f"  t_final            {log.samples[-1].time:.6g} s",
        f"  beta_v range       [{min(beta):.6g}, {max(beta):.6g}] rad",
        f"  max |omega|        {max_omega:.6g} rad/s",
        f"  friction switches  {log.mode_switches}",
        f"  wrote              {scenario.output_path} (sha256 {checksum[:16]}...)",
    ]
    if figure_path:
        lines.append(f"  figure             {figure_path}")
    return "\n".join(lines)


def cmd_simulate(args) -> int:
    workers = len(args.configs)
    env_cap = os.environ.get("EGG_SIM_THREADS")
    if env_cap is not None:
        try:
            workers = max(1, min(workers, int(env_cap)))
        except ValueError:
            print(f"error: EGG_SIM_THREADS is not an integer: {env_cap!r}", file=sys.stderr)
            return 2
    try:
        if workers == 1:
            summaries = [_run_scenario(path, args.plot) for path in args.configs]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                summaries = list(pool.map(lambda p: _run_scenario(p, args.plot),
                                          args.configs))
    except (ConfigError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except NonFiniteStateError as e:
        print(f"numerical abort: {e}", file=sys.stderr)
        return 3
    for summary in summaries:
        print(summary)
    return 0


def cmd_contact_curve(args) -> int:
    try:
        ratios = [float(r) for r in args.ratios.split(",") if r.strip()]
    except ValueError:
        print(f"error: unparseable ratio list {args.ratios!r}", file=sys.stderr)
        return 2
    if not ratios or any(r < 1.0 for r in ratios):
        print("error: ratios must be >= 1", file=sys.stderr)
        return 2
    if args.samples < 2:
        print("error: need at least 2 samples", file=sys.stderr)
        return 2

    beta_v_deg = np.linspace(0.0, 90.0, args.samples)
    curves = {}
    lines = ["ratio,beta_v_deg,beta_p_deg"]
    for ratio in ratios:
        shape = EllipsoidShape(r1=ratio, r2=1.0)
        beta_p_deg = np.array([math.degrees(contact_point(math.radians(b), shape).beta_p)
                               for b in beta_v_deg])
        curves[ratio] = (beta_v_deg, beta_p_deg)
        for bv, bp in zip(beta_v_deg, beta_p_deg):
            lines.append(f"{_fmt(ratio)},{_fmt(bv)},{_fmt(bp)}")
    text = "\n".join(lines) + "\n"

    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(text)
        print(f"wrote {args.output} ({len(lines) - 1} rows)")
        if args.plot:
            from .plotting import save_contact_curve_figure
            figure_path = os.path.splitext(args.output)[0] + ".png"
            save_contact_curve_figure(curves, figure_path)
            print(f"figure {figure_path}")
    else:
        sys.stdout.write(text)
        if args.plot:
            print("error: --plot requires --output", file=sys.stderr)
            return 2
    return 0


def cmd_validate(args) -> int:
    results = run_validation(golden_dir=args.golden_dir, quick=args.quick)
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name} max_err={r.max_err:.3e} tol={r.tolerance:.0e} "
              f"({r.detail}; {r.seconds:.2f}s)")
    if failed:
        print(f"FAILED checks: {', '.join(r.name for r in failed)}")
        return 1
    print(f"all {len(results)} checks passed")
    return 0


def cmd_expand(args) -> int:
    print(expand(args.target).format())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eggsim",
        description="Contact-torque simulator for a gyro-actuated ellipsoidal rolling robot.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run scenario config file(s)")
    p.add_argument("configs", nargs="+", metavar="config",
                   help="scenario file(s); EGG_SIM_THREADS caps parallel runs")
    p.add_argument("--plot", action="store_true",
                   help="also render a trajectory figure next to each CSV")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("contact-curve", help="contact angle vs inclination dataset")
    p.add_argument("--ratios", default="1,1.25,1.5,2",
                   help="comma-separated long/short axis ratios (>= 1)")
    p.add_argument("--samples", type=int, default=181,
                   help="inclination samples over [0, 90] degrees")
    p.add_argument("--output", help="CSV path (default: stdout)")
    p.add_argument("--plot", action="store_true",
                   help="also render the curves (requires --output)")
    p.set_defaults(fn=cmd_contact_curve)

    p = sub.add_parser("validate", help="run the built-in validation suites")
    p.add_argument("--quick", action="store_true", help="shorter statistical runs")
    p.add_argument("--golden-dir", help="directory overriding the packaged golden files")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("expand", help="print a term expansion (one term per line)")
    p.add_argument("target", choices=("L", "B", "Tmec"))
    p.set_defaults(fn=cmd_expand)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
