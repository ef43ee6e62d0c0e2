"""Command implementations behind the ``svadi`` subcommands."""

from .experiment_tools import converge, stability
from .price_tools import price
from .register_tools import register_all_commands


__all__ = ["price", "converge", "stability", "register_all_commands"]
