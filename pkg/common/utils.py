"""
Utility functions shared by the services and the CLI.
"""
import csv
import io
import json
import logging
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, Sequence, Union

from common.exceptions import ConfigError

logger = logging.getLogger(__name__)

RationalLike = Union[Fraction, int, float, str]


def parse_rational(value: RationalLike) -> Fraction:
    """
    Parse an exact rational from "p/q", an integer, a Fraction or a decimal.

    Decimal inputs are converted through their shortest decimal representation,
    so 1.4142135 becomes 14142135/10000000 reduced, and a warning is logged.

    Args:
        value: Value to parse

    Returns:
        The rational in lowest terms

    Raises:
        ConfigError: If the value cannot be read as a rational
    """
    if isinstance(value, bool):
        raise ConfigError(f"not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ConfigError(f"not a finite rational: {value!r}")
        result = Fraction(repr(value))
        logger.warning("Decimal %s converted to exact rational %s", value, result)
        return result
    if isinstance(value, str):
        text = value.strip()
        try:
            if "/" in text:
                num, den = text.split("/", 1)
                return Fraction(int(num), int(den))
            if any(ch in text for ch in ".eE"):
                result = Fraction(text)
                logger.warning("Decimal %s converted to exact rational %s", text, result)
                return result
            return Fraction(int(text))
        except (ValueError, ZeroDivisionError) as e:
            raise ConfigError(f"not a rational: {value!r} ({e})") from e
    raise ConfigError(f"not a rational: {value!r}")


def format_float(value: float) -> str:
    """
    Shortest decimal string that round-trips to the same double.
    """
    return repr(float(value))


def serialize_to_json(data: Dict[str, Any]) -> str:
    """
    Serialize a dictionary to a deterministic JSON string.

    Keys are sorted and floats use their shortest round-trip form, so equal
    inputs always give byte-identical text.

    Args:
        data: Dictionary to serialize

    Returns:
        JSON string terminated by a newline
    """
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False, ensure_ascii=False) + "\n"


def deserialize_from_json(json_str: str) -> Dict[str, Any]:
    """
    Deserialize a JSON string to a dictionary.

    Args:
        json_str: JSON string to deserialize

    Returns:
        Dictionary
    """
    return json.loads(json_str)


def write_text_atomic(path: Union[str, Path], text: str) -> Path:
    """
    Write text as UTF-8 with LF endings via a temporary file and a rename.

    Args:
        path: Destination file
        text: Content

    Returns:
        The destination path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except OSError as e:
        logger.error("Failed to write %s: %s", path, e)
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.info("Wrote %s", path)
    return path


def write_json(path: Union[str, Path], data: Dict[str, Any]) -> Path:
    """
    Write a dictionary as deterministic JSON, atomically.
    """
    return write_text_atomic(path, serialize_to_json(data))


def _format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, Fraction)):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if hasattr(value, "dtype"):
        # numpy scalars
        return _format_cell(value.item())
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """
    Render rows as CSV text with one header line and shortest round-trip floats.

    Args:
        header: Column names
        rows: Row values

    Returns:
        CSV text with LF line endings
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_cell(value) for value in row])
    return buffer.getvalue()


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """
    Write a CSV file atomically.
    """
    return write_text_atomic(path, render_csv(header, rows))
