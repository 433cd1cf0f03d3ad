"""Exception hierarchy shared by all modules.

Each class carries the CLI exit code it maps to.
"""


class LeoCascadeError(Exception):
    exit_code = 3


class ConfigError(LeoCascadeError, ValueError):
    """Invalid or missing configuration; the message names the offending key."""

    exit_code = 1

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class InputDataError(LeoCascadeError, ValueError):
    exit_code = 2


class TleParseError(InputDataError):
    def __init__(self, line_number, message):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class DomainError(LeoCascadeError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class UnsupportedInputError(DomainError):
    pass


class StaleElementsError(DomainError):
    pass


class IntegrityError(LeoCascadeError):
    """An internal invariant was violated (exit code 3)."""
