"""Command line interface: ``crcensus constants|classify|census|flow|verify``.

Exit codes: 0 success, 2 invalid configuration, 3 quadrature did not
converge, 4 condition (C) marginal (census incomplete).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .cache import ConstantsCache
from .config import load_config
from .errors import ConditionCViolation, ConfigError, ConvergenceError, MarginalCase
from .quadrature import compute_structural_constants
from .report import (PipelineError, classify_all, constants_for, emit_certificate, emit_report,
                     run_census, run_flow_scenario, sweep_grid)

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_MARGINAL = 0, 2, 3, 4


def _sweep_arg(text: str) -> tuple[float, float, int]:
    try:
        lo, hi, n = text.split(":")
        out = (float(lo), float(hi), int(n))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected LO:HI:N") from exc
    if not (out[0] > 0 and out[1] > 0 and out[2] >= 1):
        raise argparse.ArgumentTypeError("LO, HI must be positive and N >= 1")
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--no-cache", action="store_true", help="do not read or write the cache")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="crcensus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", parents=[common], help="print the structural constants as JSON")
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("classify", parents=[common], help="classify the configured critical points")
    p.add_argument("config")

    p = sub.add_parser("census", parents=[common], help="run the census and emit a certificate")
    p.add_argument("config")
    p.add_argument("--cg-sweep", type=_sweep_arg, metavar="LO:HI:N")
    p.add_argument("-o", "--output", help="certificate path (default: stdout)")
    p.add_argument("--report", help="also write the human-readable report here")

    p = sub.add_parser("flow", parents=[common], help="integrate a configured bubble scenario")
    p.add_argument("config")
    p.add_argument("--scenario", required=True)
    p.add_argument("--log", help="trajectory log (JSON lines); default: none")

    p = sub.add_parser("verify", parents=[common], help="run the built-in invariant suite")
    p.add_argument("--quick", action="store_true", help="smaller sample sizes")
    return parser


def _cache(args):
    return None if args.no_cache else ConstantsCache()


def _fail(code: int, message: str, details=()) -> int:
    print(f"error: {message}", file=sys.stderr)
    for d in details:
        print(f"  {d}", file=sys.stderr)
    return code


def _root_cause(exc):
    while isinstance(exc, PipelineError):
        exc = exc.cause
    return exc


def _dispatch(args) -> int:
    if args.command == "constants":
        cons = compute_structural_constants(args.beta, args.tol, _cache(args))
        print(json.dumps(cons.as_dict(), sort_keys=True, indent=2))
        return EXIT_OK
    if args.command == "classify":
        config = load_config(args.config)
        constants = constants_for(config, _cache(args))
        rows = [{"id": p.id, "set": cl.set.value, "sigma": cl.sigma, "m": cl.m, "beta": p.beta}
                for p, cl in zip(config.profiles, classify_all(config, constants))]
        print(json.dumps(rows, sort_keys=True, indent=2))
        return EXIT_OK
    if args.command == "census":
        config = load_config(args.config)
        sweep = sweep_grid(*args.cg_sweep) if args.cg_sweep else None
        cert = run_census(config, _cache(args), sweep)
        if args.output:
            emit_certificate(cert, args.output)
        else:
            sys.stdout.write(cert.to_json())
        if args.report:
            with open(args.report, "w") as fh:
                fh.write(emit_report(cert))
        return EXIT_OK
    if args.command == "flow":
        config = load_config(args.config)
        if args.log:
            with open(args.log, "w") as fh:
                traj, fate = run_flow_scenario(config, args.scenario, _cache(args), fh)
        else:
            traj, fate = run_flow_scenario(config, args.scenario, _cache(args))
        print(json.dumps({"scenario": args.scenario, "fate": fate.kind.value,
                          "members": list(fate.members), "reason": fate.reason,
                          "steps": len(traj) - 1, "final_J": traj[-1].J,
                          "final_lambda": traj[-1].lam}, sort_keys=True, indent=2))
        return EXIT_OK
    if args.command == "verify":
        from .verify import run_all
        results = run_all(quick=args.quick)
        for r in results:
            print(r.line())
        return EXIT_OK if all(r.passed for r in results) else 1
    raise AssertionError(args.command)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except (ConfigError, PipelineError, ConvergenceError, ConditionCViolation, MarginalCase) as exc:
        root = _root_cause(exc)
        stage = f"[{exc.stage}] " if isinstance(exc, PipelineError) else ""
        if isinstance(root, ConfigError):
            return _fail(EXIT_CONFIG, f"{stage}{root}", root.violations)
        if isinstance(root, ConvergenceError):
            return _fail(EXIT_CONVERGENCE, f"{stage}{root} (best value {root.value!r}, "
                         f"error {root.abs_error!r})")
        if isinstance(root, (ConditionCViolation, MarginalCase)):
            return _fail(EXIT_MARGINAL, f"{stage}{root}")
        return _fail(1, f"{stage}{root}")


if __name__ == "__main__":
    sys.exit(main())
