"""Result file writers.

Floats are written with ``repr``, the shortest text that round-trips to
the same double, so identical runs give identical files.
"""

import csv
import logging
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from ..exception import FileOperationError


logger = logging.getLogger(__name__)


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def ensure_directory(path: str | Path) -> Path:
    """Create ``path`` if needed and return it."""
    directory = Path(path)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise FileOperationError(f"Cannot create output directory '{directory}': {e}") from e
    return directory


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a CSV file with a header line."""
    target = Path(path)
    try:
        with target.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_value(v) for v in row])
    except OSError as e:
        raise FileOperationError(f"Cannot write '{target}': {e}") from e
    logger.debug("Wrote %s", target)
    return target


def write_json(path: str | Path, model: BaseModel) -> Path:
    """Write a pydantic model as indented JSON."""
    target = Path(path)
    try:
        target.write_text(model.model_dump_json(indent=2), encoding="utf-8")
    except OSError as e:
        raise FileOperationError(f"Cannot write '{target}': {e}") from e
    logger.debug("Wrote %s", target)
    return target
