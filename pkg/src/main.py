"""
Command-line entry point

    python -m src.main <command> --config <path> [--out <dir>] [--seed <int>] [--tolerance-scale <float>]

Exit codes: 0 success, 1 check failure, 2 configuration error, 3 numeric failure.
"""

import argparse
import sys
from typing import Dict, List, Optional

from .errors import ConfigError
from .storage.config_loader import COMMANDS, parse_config
from .utils.logger import setup_logger
from .workflow import RunGraph

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rabi-lab",
        description="Quantum and semiclassical Rabi model representations, limits and dynamics",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="key = value run configuration")
    parser.add_argument("--out", help="output directory (overrides output.path)")
    parser.add_argument("--seed", type=int, help="seed for randomized checks")
    parser.add_argument("--tolerance-scale", type=float, help="multiplier on every check tolerance")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, str]:
    overrides = {"command": args.command}
    if args.out is not None:
        overrides["output.path"] = args.out
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.tolerance_scale is not None:
        overrides["tolerance_scale"] = repr(args.tolerance_scale)
    return overrides


def run(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run the graph and map the outcome to an exit status"""
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config, _overrides(args))
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    result = RunGraph().run(config)

    error_kind = result.get("error_kind")
    if error_kind == "config":
        print(f"configuration error: {result['error']}", file=sys.stderr)
        return EXIT_CONFIG
    if error_kind == "numeric":
        print(f"numeric failure: {result['error']}", file=sys.stderr)
        return EXIT_NUMERIC
    if result.get("error"):
        print(f"error: {result['error']}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    if not result.get("all_passed"):
        print(f"check failed: {result.get('first_failure')}", file=sys.stderr)
        return EXIT_CHECK_FAILED

    logger.info(f"All {len(result['checks'])} checks passed; artifacts in {result['out_dir']}")
    return EXIT_OK


def main():
    """Main entry point"""
    try:
        sys.exit(run())
    except KeyboardInterrupt:
        print("\ninterrupted", file=sys.stderr)
        sys.exit(130)
    except Exception as e:
        logger.error(f"Error: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        sys.exit(EXIT_CHECK_FAILED)


if __name__ == "__main__":
    main()
