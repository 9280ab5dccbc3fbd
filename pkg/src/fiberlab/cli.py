"""Command-line front end: single-shot runs from a JSON config.

Exit codes: 0 ok, 2 config error, 3 numeric nonconvergence, 4 internal.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, NonConvergenceError
from .report import MODES, RunConfig, run


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fiberlab",
        description="Compare fiber topology with twisted cohomology of a real polynomial")
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="execute a configured comparison run")
    runp.add_argument("--config", help="JSON config file (flat keys, see README)")
    runp.add_argument("--out", default=".", help="output directory for artifacts")
    runp.add_argument("--polynomial", help="polynomial text, e.g. 'x1^2 + x2^2'")
    runp.add_argument("--n-vars", type=int, dest="n_vars")
    runp.add_argument("--level", type=float, help="fiber level t")
    runp.add_argument("--modes", help="comma list from: " + ",".join(MODES))
    runp.add_argument("--seed", type=int)
    runp.add_argument("--box-radius", type=float, dest="box_radius")
    runp.add_argument("--n-seeds", type=int, dest="n_seeds")
    runp.add_argument("--max-points", type=int, dest="max_points")
    runp.add_argument("--ms-grid", type=int, dest="ms_grid")
    runp.add_argument("--rips-cap", type=float, dest="rips_cap")
    runp.add_argument("--epsilon", type=float)
    runp.add_argument("--max-truncation", type=int, dest="max_truncation")
    runp.add_argument("--flow-time", type=float, dest="flow_time")
    runp.add_argument("--flow-tol", type=float, dest="flow_tol")
    runp.add_argument("--flow-points", type=int, dest="flow_points")
    runp.add_argument("--quad-tol", type=float, dest="quad_tol")
    runp.add_argument("--fd-step", type=float, dest="fd_step")
    runp.add_argument("--cone-points", type=int, dest="cone_points")
    runp.add_argument("--bounds-t-grid", dest="bounds_t_grid",
                      help="comma list of levels, e.g. 1,2,4,8")
    runp.add_argument("--bounds-r-grid", dest="bounds_r_grid",
                      help="comma list of radii")
    runp.add_argument("--restarts", type=int)
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")

    overrides = {
        "polynomial": args.polynomial, "n_vars": args.n_vars, "level": args.level,
        "seed": args.seed, "box_radius": args.box_radius, "n_seeds": args.n_seeds,
        "max_points": args.max_points, "ms_grid": args.ms_grid,
        "rips_cap": args.rips_cap, "epsilon": args.epsilon,
        "max_truncation": args.max_truncation, "flow_time": args.flow_time,
        "flow_tol": args.flow_tol, "flow_points": args.flow_points,
        "quad_tol": args.quad_tol, "fd_step": args.fd_step,
        "cone_points": args.cone_points, "restarts": args.restarts,
    }
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    if args.modes is not None:
        data["modes"] = [m.strip() for m in args.modes.split(",") if m.strip()]
    for key, raw in (("bounds_t_grid", args.bounds_t_grid),
                     ("bounds_r_grid", args.bounds_r_grid)):
        if raw is not None:
            try:
                data[key] = [float(v) for v in raw.split(",") if v.strip()]
            except ValueError:
                raise ConfigError(f"--{key.replace('_', '-')} must be a comma list "
                                  "of numbers") from None
    return RunConfig.from_dict(data)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
        report = run(config, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NonConvergenceError as exc:
        print(f"numeric nonconvergence: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4

    print(f"gate: {report.gate.label}")
    if report.comparison is not None:
        print(f"agreement: {report.comparison['agreement']}")
        for row in report.comparison["rows"]:
            mark = "==" if row["agree"] else "!="
            print(f"  H^{row['k']}: predicted {row['predicted']} {mark} "
                  f"algebraic {row['algebraic']}")
    for w in report.warnings:
        print(f"warning: {w}")
    print(f"artifacts in {args.out}: {', '.join(report.artifacts)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
