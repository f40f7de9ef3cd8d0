"""``elastores`` command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 mesh error, 4 numerical
failure, 5 verification failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .boundary_ops import QuadratureBudgetError, SingularOperatorError, WavenumberMismatchError
from .geometry import MeshError
from .io import ConfigError, parse_config
from .pipeline import COMMANDS, Session
from .resonance import NotPositiveDefiniteError, RootMatchingError

logger = logging.getLogger("elastores")

EXIT_OK, EXIT_CONFIG, EXIT_MESH, EXIT_NUMERICAL, EXIT_VERIFY = 0, 2, 3, 4, 5

NUMERICAL_ERRORS = (QuadratureBudgetError, SingularOperatorError, NotPositiveDefiniteError, RootMatchingError,
                    WavenumberMismatchError, np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elastores",
        description="Subwavelength resonances of a soft elastic inclusion.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--method", choices=("asymptotic", "qep", "both"), default="both",
                        help="resonance route for the 'resonances' command")
    parser.add_argument("--seed", type=int, default=12345, help="seed for randomized checks")
    parser.add_argument("--threads", type=int, default=None, help="assembly worker threads")
    parser.add_argument("--out", default=None, help="output directory (overrides the config)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _set_threads(n: int) -> None:
    import numba

    if not 1 <= n <= numba.config.NUMBA_NUM_THREADS:
        raise ConfigError(f"--threads must be in [1, {numba.config.NUMBA_NUM_THREADS}]")
    numba.set_num_threads(n)


def run(args: argparse.Namespace) -> int:
    try:
        config = parse_config(args.config)
        if args.threads is not None:
            _set_threads(args.threads)
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return EXIT_CONFIG
    try:
        session = Session(config, seed=args.seed, out=args.out)
    except MeshError as exc:
        logger.error("mesh error: %s", exc)
        return EXIT_MESH

    try:
        if args.command == "resonances":
            paths = session.resonances_cmd(args.method)
        elif args.command == "verify":
            paths, checks = session.verify_cmd()
            for c in checks:
                print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.6g} {c.relation} {c.threshold:g}")
            failed = [c for c in checks if not c.passed]
            for p in paths:
                print(p)
            if failed:
                logger.error("%d verification check(s) failed", len(failed))
                return EXIT_VERIFY
            return EXIT_OK
        else:
            paths = getattr(session, f"{args.command}_cmd")()
    except MeshError as exc:
        logger.error("mesh error: %s", exc)
        return EXIT_MESH
    except NUMERICAL_ERRORS as exc:
        logger.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except ValueError as exc:
        logger.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    for p in paths:
        print(p)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
