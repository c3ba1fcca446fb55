"""Exception types shared across the package."""

__all__ = [
    "DomainError",
    "DegreeCapError",
    "SolverError",
    "ExplosionError",
    "ContractError",
    "ConfigError",
]


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class DegreeCapError(ValueError):
    """A polynomial operation would exceed the configured degree cap."""


class SolverError(RuntimeError):
    """The nonlinear step solver failed to converge.

    Attributes
    ----------
    step : int
        Index of the time step at which the solve failed.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ExplosionError(RuntimeError):
    """Particle population exceeded its configured cap."""


class ContractError(ValueError):
    """Inputs violate a cross-object consistency requirement."""


class ConfigError(ValueError):
    """A configuration file or override violates the schema."""
