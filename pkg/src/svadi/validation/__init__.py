"""Validation of config files and output paths."""

from .config_validators import load_run_config, validate_config_file, validate_output_dir


__all__ = [
    "load_run_config",
    "validate_config_file",
    "validate_output_dir",
]
