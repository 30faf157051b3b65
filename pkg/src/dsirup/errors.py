"""Typed errors shared across the package."""

from __future__ import annotations


class DsirupError(Exception):
    """Base class for all package errors."""


class ParseError(DsirupError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NotADitreeError(DsirupError):
    pass


class NotAOneCQError(DsirupError):
    pass


class ShapeViolationError(DsirupError):
    pass


class BudgetExceededError(DsirupError):
    """A search ran out of its node-expansion budget.

    Distinct from a negative answer: the caller must not read it as "no".
    """


class CapExceededError(DsirupError):
    """An enumeration hit its cap and the result would be inconclusive."""


class NameClashError(DsirupError):
    pass


class PairIneligibleError(DsirupError):
    pass
