"""Exception hierarchy shared by every auditing module."""

from __future__ import annotations


class StabAuditError(Exception):
    """Base class for all package errors."""


class NotSymmetric(StabAuditError, ValueError):
    pass


class ParseError(StabAuditError, ValueError):
    """A CSV cell could not be parsed as a finite real number."""

    def __init__(self, row: int, column: str, text: str):
        self.row = row
        self.column = column
        self.text = text
        super().__init__(f"row {row}, column {column!r}: cannot parse {text!r} as a finite number")


class MissingColumn(StabAuditError, KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(name)

    def __str__(self) -> str:
        return f"column {self.name!r} not found in header"


class ShapeError(StabAuditError, ValueError):
    """The dataset does not have the layout an auditor requires."""


class NotBinaryTreatment(ShapeError):
    pass


class EmptyGroup(ShapeError):
    pass


class SingularCovariance(StabAuditError, ValueError):
    pass


class TooLarge(StabAuditError):
    """Brute-force enumeration refused because it would not finish."""


class InvariantViolation(StabAuditError, AssertionError):
    """Lower and upper bounds reported for the same dataset are inconsistent."""
