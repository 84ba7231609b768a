"""Exception types raised by the solvers."""


class SolverError(Exception):
    """Base class for numerical failures in this package."""


class StageSolveError(SolverError):
    """A DIRK stage equation could not be solved.

    Carries the step index ``step`` (1-based, 0 while unknown), the stage
    index ``stage`` (0-based) and the last residual norm seen.
    """

    def __init__(self, message, step=0, stage=0, residual=float("nan")):
        super().__init__(message)
        self.step = step
        self.stage = stage
        self.residual = residual


class ShootingError(SolverError):
    """A periodic solve did not converge. Carries the partial report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DualSolveError(SolverError):
    """A periodic dual solve did not converge. Carries the partial report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class OracleError(SolverError):
    """The dense periodic oracle failed (I - Phi numerically singular).

    The assembled monodromy matrix and affine term are attached so callers
    can still inspect them.
    """

    def __init__(self, message, phi=None, affine=None):
        super().__init__(message)
        self.phi = phi
        self.affine = affine


class GradientError(SolverError):
    """A gradient computation failed. ``stage`` labels the failing phase:
    'primal', 'qoi', 'dual' or 'assembly'."""

    def __init__(self, message, stage, cause=None):
        super().__init__(message)
        self.stage = stage
        self.__cause__ = cause


class OptimizationError(SolverError):
    """Constrained optimization aborted. Carries the history so far."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history


class ConfigError(Exception):
    """A run configuration is malformed. Message names the offending field."""
