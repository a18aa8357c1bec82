"""Exceptions raised by the exo_mdp package."""


class ExoMdpError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(ExoMdpError, ValueError):
    """An index, shape or range is not valid for the model it is used with."""


class CapacityError(ExoMdpError, RuntimeError):
    """A policy space is too large to enumerate under the configured cap."""

    def __init__(self, message: str, required_cap: int) -> None:
        super().__init__(message)
        self.required_cap = required_cap


class ConditioningError(ExoMdpError, RuntimeError):
    """The least-squares design matrix is singular or rank deficient."""

    def __init__(self, message: str, lambda_min: float) -> None:
        super().__init__(message)
        self.lambda_min = lambda_min


class ConfigError(ExoMdpError, ValueError):
    """An experiment config field is missing or invalid."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"config field '{field}': {message}")
        self.field = field
