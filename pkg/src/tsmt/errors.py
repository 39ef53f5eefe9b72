"""Exception types shared across the package."""


class TsmtError(Exception):
    """Base class for all errors raised by tsmt."""


class ParameterError(TsmtError, ValueError):
    """Invalid distribution parameter (e.g. degrees of freedom)."""


class DomainError(TsmtError, ValueError):
    """Argument outside the domain of a function."""


class ConfigurationError(TsmtError, ValueError):
    """Invalid procedure, scenario or command-line configuration."""


class DataError(TsmtError, ValueError):
    """Malformed input data."""
