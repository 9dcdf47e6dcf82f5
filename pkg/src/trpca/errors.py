"""Exception hierarchy shared by the library and the command line."""


class TrpcaError(Exception):
    """Base class for all errors raised by :mod:`trpca`."""


class DomainError(TrpcaError, ValueError):
    """Input outside the mathematical domain of an operation (NaN, inf, ...)."""


class UndefinedMeanError(TrpcaError, ValueError):
    """Circular mean requested for a sample with (numerically) zero resultant."""


class NumericError(TrpcaError, ArithmeticError):
    """A series or iterative computation failed to converge."""


class ConcentrationError(TrpcaError, ValueError):
    """Rejection sampler acceptance rate too low for the requested parameters."""


class ConvergenceError(TrpcaError):
    """An optimizer or iterative solver did not converge.

    The best-effort result, when one exists, is kept in ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class SeedError(TrpcaError, ValueError):
    """The chaining seed is not close to any ridge point."""


class ParametrizationError(TrpcaError, ValueError):
    """A ridge cannot be written as a function of the index coordinate."""


class InsufficientDataError(TrpcaError, ValueError):
    """Too few points for the requested computation."""


class PipelineError(TrpcaError):
    """A stage of the TR-PCA pipeline failed; ``step`` names the stage."""

    def __init__(self, step, cause):
        super().__init__(f"step {step} failed: {cause}")
        self.step = step
        self.cause = cause


class InconsistencyError(TrpcaError, ArithmeticError):
    """Two results that must be ordered are not (e.g. a restricted fit beating
    the unrestricted one)."""


class UndefinedPveError(TrpcaError, ValueError):
    """Both score variances vanish, so the variance ratio is undefined."""
