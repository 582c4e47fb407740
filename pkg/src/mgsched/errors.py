"""Exception hierarchy shared across the package."""


class MgschedError(Exception):
    """Base class for all package errors."""


class ParameterError(MgschedError, ValueError):
    """A model parameter violates its domain."""


class InfeasibleMomentsError(ParameterError):
    """Mean/variance pair cannot come from a Beta law on (0, 1)."""


class StepMismatchError(ParameterError):
    """Two probabilistic sequences use different step sizes."""


class ScenarioError(MgschedError, ValueError):
    """Scenario document failed validation.

    ``path`` points at the offending field, e.g. ``pv.mu[3]``.
    """

    def __init__(self, path, message):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class DegenerateInstanceError(MgschedError, RuntimeError):
    """The LP engine reported numerical trouble it could not resolve."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class TooManyIntegersError(MgschedError, ValueError):
    """Brute-force enumeration refused: too many integer variables."""


class SampleSizeWarning(UserWarning):
    """Monte Carlo sample count too small to be statistically meaningful."""
