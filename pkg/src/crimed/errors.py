class DomainError(ValueError):
    """An argument lies outside the region where a quantity is defined."""


class NumericalError(RuntimeError):
    """An iterative numerical routine failed to converge."""


class ConfigError(ValueError):
    """A malformed experiment configuration or policy/instance descriptor."""
