"""
Command-line parser for the svadi pricer.

Acts as the central place where the subcommands are wired into one parser.
"""

import argparse

from . import __version__
from .tools.register_tools import register_all_commands


def create_parser() -> argparse.ArgumentParser:
    """Create the ``svadi`` argument parser with all subcommands registered."""
    parser = argparse.ArgumentParser(
        prog="svadi",
        description=(
            "High-order compact ADI pricer for European options under "
            "stochastic-volatility models. Subcommands write CSV results; "
            "SVADI_THREADS caps experiment workers."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    register_all_commands(subparsers)
    return parser
