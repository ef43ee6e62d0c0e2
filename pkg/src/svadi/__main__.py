"""
Entry point for running svadi as a module.

- Pricing: `python -m svadi price --config run.json`
- Studies: `python -m svadi converge --rho=-0.5,0` and `python -m svadi stability`

Exit codes: 0 on success, 2 on configuration errors, 3 on numerical
instability, 1 on any other failure. Diagnostics go to standard error.
"""

import asyncio
import logging
import sys
from collections.abc import Sequence

from .cli import create_parser
from .exception import EXIT_CONFIG, EXIT_OK, ConfigurationError, ExceptionTool
from .utils.environment import get_log_level


def _configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING
    try:
        level = get_log_level(default=level)
    except ConfigurationError as e:
        print(f"svadi: {e}", file=sys.stderr)
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: Sequence[str] | None = None) -> int:
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors, matching the config exit code
        return int(e.code) if isinstance(e.code, int) else EXIT_CONFIG

    _configure_logging(args.verbose)
    options = {
        k: v
        for k, v in vars(args).items()
        if k not in ("handler", "command", "verbose")
    }
    try:
        result = asyncio.run(args.handler(**options))
    except Exception as e:  # noqa: BLE001
        result = ExceptionTool.handle_error(e, command=args.command)

    if result.get("status") == "error":
        print(f"svadi {args.command}: {result['message']}", file=sys.stderr)
        if result.get("suggestion"):
            print(f"  hint: {result['suggestion']}", file=sys.stderr)
        return int(result.get("exit_code", 1))

    print(result["message"])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
