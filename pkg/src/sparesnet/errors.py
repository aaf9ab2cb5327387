"""Exception hierarchy shared by the solvers, the simulator and the CLI."""


class SparesError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(SparesError, ValueError):
    """Bad input: a parameter outside its domain or a malformed config."""


class NumericalError(SparesError, ArithmeticError):
    """A computation could not be carried out to the required accuracy."""


class QuadratureError(NumericalError):
    def __init__(self, message, abserr=None):
        super().__init__(message if abserr is None else f"{message} (estimated error {abserr:.3e})")
        self.abserr = abserr


class IllConditionedError(NumericalError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class UnsupportedSizeError(NumericalError):
    pass


class UnsupportedLifetimeError(ValidationError):
    """Raised when a solver is handed a lifetime it cannot analyse (degenerate)."""


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
