"""Exception types shared across the simulator."""


class UpcsimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(UpcsimError, ValueError):
    """Scenario configuration is missing, malformed, or violates the schema."""


class InfeasibleLoadError(UpcsimError, ValueError):
    """No feasible power allocation exists for the requested load and targets."""


class SolverError(UpcsimError, RuntimeError):
    """A fixed-point solver did not converge.

    Carries the residual at the last iterate in ``residual``.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class SingularGramError(UpcsimError, RuntimeError):
    """A spreading-matrix realization has a singular or near-singular Gram matrix."""
