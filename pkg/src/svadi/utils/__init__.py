"""
Utility functions for svadi.
This package contains helpers for environment settings and result files.
"""

from .environment import get_log_level, get_thread_count
from .output_utils import ensure_directory, write_csv, write_json


__all__ = [
    "ensure_directory",
    "get_log_level",
    "get_thread_count",
    "write_csv",
    "write_json",
]
