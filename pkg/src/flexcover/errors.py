"""Exception hierarchy.

Everything a user can trigger with bad input derives from :class:`InputError`
(the CLI maps it to exit code 2); :class:`InvariantError` signals a broken
internal guarantee (exit code 1).
"""

from __future__ import annotations


class FlexcoverError(Exception):
    """Base class for all package errors."""


class InputError(FlexcoverError):
    """Malformed or inconsistent user-supplied input."""


class InvariantError(FlexcoverError):
    """An internal invariant failed to hold."""


class CatalogError(InputError):
    pass


class InventoryError(InputError):
    pass


class OverlayError(InputError):
    pass


class EligibilityError(InputError):
    pass


class TurtleSyntaxError(InputError):
    """Syntax error in a Turtle document, located by 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class UndeclaredPrefixError(TurtleSyntaxError):
    def __init__(self, prefix: str, line: int, column: int):
        self.prefix = prefix
        super().__init__(f"undeclared prefix '{prefix}:'", line, column)
