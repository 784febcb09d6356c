"""Exception types shared across the package."""


class InputError(ValueError):
    """Raised when a value passed to an operation is outside its domain."""


class ConfigError(ValueError):
    """Raised when a model or detector configuration is inconsistent."""
