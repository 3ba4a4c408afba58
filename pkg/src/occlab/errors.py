class OccLabError(Exception):
    """Base class for every error raised by occlab."""


class ConfigurationError(OccLabError, ValueError):
    """Raised for invalid configuration, shapes, files or camera poses. Maps to exit code 2."""


class NumericalError(OccLabError, ArithmeticError):
    """Raised when a loss or gradient stops being finite. Maps to exit code 3.

    Args:
        message (str): Human readable description
        diagnostics (dict, optional): Offending parameter names, counts and the step
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}

    def __str__(self):
        base = super().__str__()
        if not self.diagnostics:
            return base
        details = ", ".join(f"{k}={v}" for k, v in sorted(self.diagnostics.items()))
        return f"{base} ({details})"


def reject_unknown_keys(section, kwargs, allowed):
    """Raises ConfigurationError when a config section carries keys nobody reads."""
    unknown = sorted(set(kwargs) - set(allowed))
    if unknown:
        raise ConfigurationError(f"Unknown key(s) in [{section}]: {', '.join(unknown)}")


def require(condition, message):
    if not condition:
        raise ConfigurationError(message)
