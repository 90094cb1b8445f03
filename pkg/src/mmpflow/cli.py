"""Command-line interface: ``mmpflow run | verify | inspect``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .config import parse_config
from .errors import ConfigParseError, ConfigValidationError, SnapshotFormatError
from .run import EXIT_OK, EXIT_USAGE, EXIT_VERIFY_FAILED, run
from .snapshot import read_snapshot
from .spectral import curl, l2_norm, sup_norm
from .verify import SUITES, run_suite


def _cmd_run(args) -> int:
    try:
        cfg = parse_config(args.config)
    except (ConfigParseError, ConfigValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    result = run(cfg, args.output)
    stream = sys.stdout if result.exit_code == EXIT_OK else sys.stderr
    print(f"{result.message}; outputs in {result.output_dir}", file=stream)
    return result.exit_code


def _cmd_verify(args) -> int:
    checks = run_suite(args.suite)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


def _cmd_inspect(args) -> int:
    try:
        state, params, header = read_snapshot(args.snapshot)
    except (SnapshotFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"version  {header.version}")
    print(f"n        {header.n}")
    print(f"time     {header.time!r}")
    names = ("mu", "chi", "kappa", "gamma", "nu")
    print("params   " + "  ".join(f"{k}={v!r}" for k, v in zip(names, params.as_tuple())))
    for name, F in zip(("u", "omega", "b"), state.fields()):
        print(f"{name:<6s}   L2={l2_norm(F):.10e}  sup={sup_norm(F):.10e}  curl L2={l2_norm(curl(F)):.10e}")
    print(f"max |div u|, |div b| per mode: {state.divergence_defect():.3e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmpflow", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate a configuration")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="output directory (overrides MMP_OUTPUT_DIR and the config)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("verify", help="run self-test suites")
    p.add_argument("suite", choices=[*SUITES, "all"])
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("inspect", help="print a snapshot header and norms")
    p.add_argument("snapshot")
    p.set_defaults(func=_cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    np.seterr(over="ignore", invalid="ignore")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
