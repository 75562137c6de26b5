"""Exception hierarchy."""


class AecError(Exception):
    pass


class DimensionError(AecError, ValueError):
    """Array length does not match the frame geometry."""


class ParameterError(AecError, ValueError):
    """Argument outside its valid domain."""


class FormatError(AecError, ValueError):
    """Malformed or unsupported audio file."""


class NumericalError(AecError, ArithmeticError):
    """Linear system is singular or indefinite."""


class ConfigError(AecError, ValueError):
    """Invalid experiment configuration."""
