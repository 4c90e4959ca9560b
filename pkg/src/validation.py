"""
Input validation and the error types shared by the toolkit.
"""

import math
import re
from typing import Iterable, Optional


class ValidationError(Exception):
    """Raised when a value violates a domain invariant."""
    pass


class ParseError(ValidationError):
    """Raised when an input file is malformed."""

    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        field: Optional[str] = None,
        row: Optional[int] = None,
    ):
        self.line = line
        self.field = field
        self.row = row

        where = []
        if line is not None:
            where.append(f"line {line}")
        if row is not None:
            where.append(f"row {row}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")


class SpecError(ValidationError):
    """Raised when a synthesis spec cannot be realized."""
    pass


class DomainError(ValueError):
    """Raised when an argument is outside a function's mathematical domain."""
    pass


class InsufficientDataError(ValueError):
    """Raised when a fit has too few samples or distinct distances."""
    pass


class NoSignalError(ValueError):
    """Raised when a power figure is requested from an empty PADP."""
    pass


def validate_finite(name: str, value: float) -> float:
    """
    Validate that a value is a finite real number.

    Args:
        name: Field name used in the error message
        value: Raw value

    Returns:
        The value as float

    Raises:
        ValidationError: If the value is not a finite number
    """
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a number, got {value!r}")

    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value}")

    return value


def validate_positive(name: str, value: float) -> float:
    """
    Validate that a value is finite and strictly positive.

    Raises:
        ValidationError: If the value is not > 0
    """
    value = validate_finite(name, value)
    if value <= 0:
        raise ValidationError(f"{name} must be positive, got {value}")
    return value


def validate_non_negative(name: str, value: float) -> float:
    """Validate that a value is finite and >= 0."""
    value = validate_finite(name, value)
    if value < 0:
        raise ValidationError(f"{name} must be non-negative, got {value}")
    return value


def validate_link_id(link_id: str) -> str:
    """
    Validate and sanitize a link identifier.

    Link ids end up in file names and CSV cells, so only letters, digits,
    dash, dot and underscore are accepted.

    Args:
        link_id: Raw identifier

    Returns:
        Stripped identifier

    Raises:
        ValidationError: If the identifier is empty, too long or has
            characters outside the whitelist
    """
    if not link_id:
        raise ValidationError("Link id cannot be empty")

    link_id = str(link_id).strip()

    if len(link_id) > 64:
        raise ValidationError("Link id too long (max 64 characters)")

    if not re.match(r'^[A-Za-z0-9_\-\.]+$', link_id):
        raise ValidationError(
            f"Link id '{link_id}' contains invalid characters. "
            "Only letters, numbers, dash, dot and underscore are allowed."
        )

    return link_id


def validate_axis(
    name: str,
    values: Iterable[float],
    low: float,
    high: float,
    high_inclusive: bool = True,
) -> tuple[float, ...]:
    """
    Validate one axis of an angle grid.

    Args:
        name: Axis name used in the error message
        values: Grid values in degrees
        low: Inclusive lower bound
        high: Upper bound
        high_inclusive: Whether ``high`` itself is allowed

    Returns:
        The values as a tuple of floats

    Raises:
        ValidationError: If the axis is empty, not strictly increasing or
            out of bounds
    """
    values = tuple(validate_finite(name, v) for v in values)

    if not values:
        raise ValidationError(f"{name} cannot be empty")

    for prev, cur in zip(values, values[1:]):
        if cur <= prev:
            raise ValidationError(f"{name} must be strictly increasing ({prev} then {cur})")

    upper_ok = values[-1] <= high if high_inclusive else values[-1] < high
    if values[0] < low or not upper_ok:
        raise ValidationError(f"{name} values must lie within [{low}, {high}]")

    return values
