"""Exception hierarchy shared across the framework."""

from __future__ import annotations


class DrpError(Exception):
    """Base class for all framework errors."""


class ValidationError(DrpError):
    """Input failed schema or invariant validation."""


class MissingRequired(ValidationError):
    def __init__(self, name: str):
        super().__init__(f"missing required input: {name!r}")
        self.name = name


class TypeMismatch(ValidationError):
    def __init__(self, name: str, expected_tag: str, raw_value: str):
        super().__init__(
            f"input {name!r} does not parse as {expected_tag}: {raw_value!r}"
        )
        self.name = name
        self.expected_tag = expected_tag
        self.raw_value = raw_value


class InvariantViolation(DrpError):
    """A domain value would violate one of its declared invariants."""


class DecodeError(DrpError):
    """Wire bytes could not be decoded into a domain value."""

    def __init__(self, position: int, reason: str):
        super().__init__(f"decode failed at byte {position}: {reason}")
        self.position = position
        self.reason = reason


class TransitionError(DrpError):
    """Illegal request status transition; state was left unchanged."""


class StorageError(DrpError):
    """Underlying store could not complete a read or write."""
