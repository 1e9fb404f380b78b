"""Exception types raised across the package."""


class PqosError(Exception):
    """Base class for all package errors."""


class ConfigError(PqosError, ValueError):
    """Invalid configuration value; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DomainError(PqosError, ValueError):
    """Input outside the domain an operation is defined on."""


class SchemaError(PqosError, ValueError):
    """Column or feature layout does not match what was expected."""


class ParseError(PqosError, ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class DataError(PqosError, ValueError):
    def __init__(self, row: int, message: str):
        self.row = row
        super().__init__(f"row {row}: {message}")
