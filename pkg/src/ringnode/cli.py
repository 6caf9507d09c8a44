"""Command-line front end.

Exit codes: 0 success, 1 validation error, 2 numerical failure,
3 invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .chiral_interface import directionality, max_outcoupling, vacuum_coupling
from .config import ConfigError, load_config, parse_value
from .constants import rad_s_to_ghz
from .odeint import IntegrationError
from .scan import (
    FIDELITY_COLUMNS,
    FIGURES,
    SPECTRUM_COLUMNS,
    TRACE_COLUMNS,
    ScanError,
    ScanSpec,
    fidelity_row,
    reproduce,
    run_dynamics,
    run_scan,
    spectrum_row,
    trace_rows,
    write_outputs,
)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_INVARIANT = 0, 1, 2, 3

log = logging.getLogger("ringnode")


def _parse_set(items):
    overrides = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = parse_value(value.strip())
    return overrides


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration (default: shipped parameter set)")
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", default=[],
                        help="override a configuration value, e.g. rates.kappa_0=0.5")
    common.add_argument("--tol-abs", type=float, help="integrator absolute tolerance")
    common.add_argument("--tol-rel", type=float, help="integrator relative tolerance")
    common.add_argument("--jobs", type=int, default=1, help="parallel scan workers")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="ringnode", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="flux-tuned cavity resonance (both branches)")
    sub.add_parser("coupling", parents=[common], help="vacuum coupling g and fiber outcoupling")
    sub.add_parser("dynamics", parents=[common], help="master-equation trace")
    sub.add_parser("fidelity", parents=[common], help="analytic vs integrated fidelity")
    sub.add_parser("scan", parents=[common], help="parameter scan from the [scan] section")
    rep = sub.add_parser("reproduce", parents=[common], help="regenerate a figure panel")
    rep.add_argument("figure_id", help=f"one of: {', '.join(FIGURES)}")
    return parser


def _load(args):
    overrides = _parse_set(args.set)
    if args.tol_abs is not None:
        overrides["solver.tol_abs"] = args.tol_abs
    if args.tol_rel is not None:
        overrides["solver.tol_rel"] = args.tol_rel
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    return load_config(args.config, overrides)


def _run(args) -> int:
    config = _load(args)
    cmd = {"subcommand": args.command, "set": list(args.set)}
    ok = True

    if args.command == "spectrum":
        rows = [spectrum_row(config, branch) for branch in (1, -1)]
        paths = write_outputs(args.out, "spectrum", SPECTRUM_COLUMNS, rows, config, [], cmd)
    elif args.command == "coupling":
        geom, coupler = config.coupling_geometry(), config.fiber_coupler()
        kappa, exceeded = max_outcoupling(coupler)
        row = {
            "x_nm": config.get("coupling.x_nm"),
            "v_mode_m3": config.get("coupling.v_mode_m3"),
            "g_ghz": rad_s_to_ghz(vacuum_coupling(geom)),
            "r_um": config.get("fiber.R_um"),
            "a_fiber_m2": config.get("fiber.a_fiber_m2"),
            "kappa_r_ghz": rad_s_to_ghz(kappa),
            "directionality_r1": directionality(1.0),
        }
        cols = list(row)
        paths = write_outputs(args.out, "coupling", cols, [row], config,
                              [{"bound_exceeded": exceeded}], cmd)
    elif args.command == "dynamics":
        trace = run_dynamics(config)
        check = trace.invariant_report()
        ok = all(v for k, v in check.items() if k.endswith("_ok"))
        paths = write_outputs(args.out, "dynamics", TRACE_COLUMNS, trace_rows(trace), config,
                              [check], cmd, "ok" if ok else "invariant_violation")
    elif args.command == "fidelity":
        row, trace, report = fidelity_row(config)
        check = trace.invariant_report()
        check["flags"] = list(report.flags)
        check["F_total_expansion"] = report.F_total_expansion
        check["C_tripod"] = report.C_tripod
        check["dephasing_bound"] = report.dephasing_bound
        ok = all(v for k, v in check.items() if k.endswith("_ok"))
        paths = write_outputs(args.out, "fidelity", FIDELITY_COLUMNS, [row], config, [check],
                              cmd, "ok" if ok else "invariant_violation")
    elif args.command == "scan":
        spec = ScanSpec.from_config(config)
        result = run_scan(spec, config, args.out, None, args.jobs)
        ok, paths = result.ok, (result.csv_path, result.manifest_path)
    else:
        result = reproduce(args.figure_id, args.out, config, args.jobs)
        ok, paths = result.ok, (result.csv_path, result.manifest_path)

    for p in paths:
        print(p)
    if not ok:
        log.error("invariant violation; see %s", paths[-1])
        return EXIT_INVARIANT
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _run(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except ScanError as exc:
        log.error("%s", exc)
        if isinstance(exc.__cause__, (IntegrationError, ArithmeticError)):
            return EXIT_NUMERICAL
        return EXIT_VALIDATION
    except IntegrationError as exc:
        log.error("%s", exc)
        return EXIT_NUMERICAL
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
