"""
Register all commands with the argument parser.
"""

import argparse
from collections.abc import Sequence

from . import experiment_tools, price_tools


def float_list(text: str) -> list[float]:
    """Parse a comma separated list of floats."""
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not a comma separated list of numbers: '{text}'") from e
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", dest="config_path", metavar="PATH", help="JSON run config")
    parser.add_argument("--out", metavar="DIR", help="Output directory")
    parser.add_argument("--scheme", choices=["ho", "second"], help="Spatial scheme")
    parser.add_argument(
        "--rho", type=float_list, metavar="LIST", help="Correlations, e.g. --rho=-0.5,0"
    )
    parser.add_argument("--gamma", type=float_list, metavar="LIST", help="Mesh ratios dtau/h^2")
    parser.add_argument("--h", type=float_list, metavar="LIST", help="Mesh spacings")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level")


def register_all_commands(subparsers: "argparse._SubParsersAction[argparse.ArgumentParser]") -> None:
    """Register every subcommand; each stores its coroutine function as ``handler``."""

    commands: Sequence[tuple[str, object, str]] = (
        # svadi price - price surface on one mesh
        ("price", price_tools.price, "Price a European put and write the surface"),
        # svadi converge - spatial convergence orders
        ("converge", experiment_tools.converge, "Estimate spatial convergence orders"),
        # svadi stability - (gamma, h) sweep
        ("stability", experiment_tools.stability, "Sweep mesh ratio and spacing"),
    )
    for name, handler, summary in commands:
        parser = subparsers.add_parser(name, help=summary, description=summary)
        _add_common_flags(parser)
        parser.set_defaults(handler=handler, command=name)
