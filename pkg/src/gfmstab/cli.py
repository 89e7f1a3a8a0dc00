"""Command-line entry points.

Subcommands: simulate, cct, sweep, design, pdelta.  Exit codes: 0 success,
1 usage error, 2 validation error, 3 simulation failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .analysis import (DesignSpec, PDELTA_MODES, SWEEP_AXES, cct_search,
                       damping_ratio_from_d, design_ip, design_vsm, pdelta,
                       sweep)
from .output import (export_pdelta_csv, export_probe_log, export_sweep_csv,
                     export_trajectory, format_cct_report, format_design_sheet,
                     format_sweep_table)
from .params import CctBounds, ConfigError
from .scenario import ScenarioError, dump_resolved, load_scenario
from .simulator import InitializationError, simulate


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageError(message)


def _add_scenario_opts(p: argparse.ArgumentParser):
    p.add_argument("--scenario", required=True,
                   help="scenario file (path, or a name resolved against "
                        "./scenarios and the repository corpus)")
    p.add_argument("--override", action="append", default=[],
                   metavar="SECTION.KEY=VALUE",
                   help="override one scenario value (repeatable)")
    p.add_argument("--print-config", action="store_true",
                   help="print the fully resolved configuration and exit")
    p.add_argument("--quiet", action="store_true",
                   help="suppress informational output")


def _resolve_scenario_path(name: str) -> Path:
    candidates = [Path(name)]
    if not name.endswith(".toml"):
        candidates.append(Path(name + ".toml"))
    stem = candidates[-1].name
    candidates.append(Path("scenarios") / stem)
    candidates.append(Path(__file__).resolve().parents[2] / "scenarios" / stem)
    for cand in candidates:
        if cand.is_file():
            return cand
    raise ScenarioError(f"scenario {name!r} not found (tried "
                        + ", ".join(str(c) for c in candidates) + ")")


def _load(args):
    path = _resolve_scenario_path(args.scenario)
    return load_scenario(path, overrides=args.override), path


def _values_list(text: str) -> list:
    values = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        low = item.lower()
        if low in ("true", "false"):
            values.append(low == "true")
            continue
        try:
            values.append(float(item))
        except ValueError:
            values.append(item)
    return values


def _cmd_simulate(args) -> int:
    loaded, path = _load(args)
    if args.print_config:
        print(dump_resolved(loaded), end="")
        return 0
    traj, verdict = simulate(loaded.converter, loaded.grid, loaded.strategy,
                             loaded.sim)
    out = Path(args.out) if args.out else Path(f"{path.stem}_traj.csv")
    export_trajectory(traj, out)
    print(f"verdict: {verdict}")
    if not args.quiet:
        print(f"wrote {out}")
    if args.plot:
        from .plots import plot_trajectory
        png = out.with_suffix(".png")
        plot_trajectory(traj, png, title=path.stem)
        if not args.quiet:
            print(f"wrote {png}")
    return 0


def _cmd_cct(args) -> int:
    loaded, path = _load(args)
    if args.print_config:
        print(dump_resolved(loaded), end="")
        return 0
    bounds = loaded.cct
    if args.resolution is not None:
        bounds = CctBounds(t_lo=bounds.t_lo, t_hi=bounds.t_hi,
                           resolution=args.resolution)
    result = cct_search(loaded.converter, loaded.grid, loaded.strategy,
                        loaded.sim, bounds)
    print(format_cct_report(result, show_probes=not args.quiet))
    if args.out:
        export_probe_log(result, args.out)
        if not args.quiet:
            print(f"wrote {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    loaded, path = _load(args)
    if args.print_config:
        print(dump_resolved(loaded), end="")
        return 0
    bounds = loaded.cct
    if args.resolution is not None:
        bounds = CctBounds(t_lo=bounds.t_lo, t_hi=bounds.t_hi,
                           resolution=args.resolution)
    values = _values_list(args.values)
    rows = sweep(args.axis, values, loaded.converter, loaded.grid,
                 loaded.strategy, loaded.sim, bounds)
    if not args.quiet:
        print(format_sweep_table(rows, args.axis))
    out = Path(args.out) if args.out else Path(f"{path.stem}_sweep.csv")
    export_sweep_csv(rows, args.axis, out)
    if not args.quiet:
        print(f"wrote {out}")
    if args.plot:
        from .plots import plot_sweep
        png = out.with_suffix(".png")
        plot_sweep(rows, args.axis, png)
        if not args.quiet:
            print(f"wrote {png}")
    return 0


def _cmd_design(args) -> int:
    if (args.zeta is None) == (args.d is None):
        raise ConfigError("give exactly one of --zeta or --d")
    omega_b = 2.0 * math.pi * args.f
    if args.zeta is None:
        zeta = damping_ratio_from_d(args.d, args.h, args.xc, omega_b)
    else:
        zeta = args.zeta
    spec = DesignSpec(h_gfm=args.h, zeta=zeta, x_c=args.xc, omega_b=omega_b)
    vsm = design_vsm(spec)
    ip = design_ip(spec)
    print(format_design_sheet(args.h, zeta, args.xc, omega_b,
                              vsm["d_gfm"], ip["k_p"], vsm["omega_n"]))
    return 0


def _cmd_pdelta(args) -> int:
    loaded, path = _load(args)
    if args.print_config:
        print(dump_resolved(loaded), end="")
        return 0
    modes = list(PDELTA_MODES) if args.mode == "all" else [args.mode]
    curves = [pdelta(loaded.converter, loaded.grid, m) for m in modes]
    out = Path(args.out) if args.out else Path(f"{path.stem}_pdelta.csv")
    export_pdelta_csv(curves, out)
    for curve in curves:
        onset = ("none" if curve.delta_a is None
                 else f"{math.degrees(curve.delta_a):.2f} deg")
        print(f"{curve.mode}: limit onset {onset}, "
              f"peak {curve.p_max2:.3f} pu")
    if not args.quiet:
        print(f"wrote {out}")
    if args.plot:
        from .plots import plot_pdelta
        png = out.with_suffix(".png")
        plot_pdelta(curves, png)
        if not args.quiet:
            print(f"wrote {png}")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="gfmstab",
                     description="Grid-forming converter transient-stability "
                                 "toolkit")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("simulate", help="run one fault scenario",
                       parents=[], description="Run one scenario and export "
                       "the trajectory CSV.")
    _add_scenario_opts(p)
    p.add_argument("--out", help="trajectory CSV path")
    p.add_argument("--plot", action="store_true",
                   help="also render the trajectory figure")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("cct", help="bisect the critical clearing time")
    _add_scenario_opts(p)
    p.add_argument("--resolution", type=float,
                   help="search quantum in seconds (default from [cct])")
    p.add_argument("--out", help="probe-log CSV path")
    p.set_defaults(func=_cmd_cct)

    p = sub.add_parser("sweep", help="clearing times over a parameter sweep")
    _add_scenario_opts(p)
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True,
                   help="comma-separated sweep values")
    p.add_argument("--resolution", type=float)
    p.add_argument("--out", help="sweep CSV path")
    p.add_argument("--plot", action="store_true",
                   help="also render the sweep bar chart")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("design", help="second-order controller design sheet")
    p.add_argument("--h", type=float, required=True, help="inertia constant, s")
    p.add_argument("--zeta", type=float, help="target damping ratio")
    p.add_argument("--d", type=float,
                   help="given damping coefficient (invert for zeta)")
    p.add_argument("--xc", type=float, default=0.15,
                   help="converter reactance, pu")
    p.add_argument("--f", type=float, default=50.0, help="nominal Hz")
    p.set_defaults(func=_cmd_design)

    p = sub.add_parser("pdelta", help="power-angle curve CSV")
    _add_scenario_opts(p)
    p.add_argument("--mode", default="all",
                   choices=("all",) + PDELTA_MODES)
    p.add_argument("--out", help="curve CSV path")
    p.add_argument("--plot", action="store_true",
                   help="also render the curve figure")
    p.set_defaults(func=_cmd_pdelta)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return 1
    except SystemExit as exc:  # --help and argparse internals
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (ScenarioError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InitializationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
