"""Exception types shared across the package."""


class PtscatError(Exception):
    """Base class."""


class PoleError(PtscatError, ValueError):
    """Argument sits on a pole of a meromorphic function."""


class DomainError(PtscatError, ValueError):
    """Argument outside the supported domain."""


class AccuracyLossError(PtscatError, ArithmeticError):
    """Series or iteration hit its cap before meeting the stopping rule."""


class DegenerateError(PtscatError, ValueError):
    """Logarithmic (integer-gap) hypergeometric case."""


class RegimeError(PtscatError, ValueError):
    """No admissible asymptotic regime or reconstruction hypothesis applies."""


class ConvergenceError(PtscatError, ArithmeticError):
    """Fixed-point or root iteration failed to converge."""


class BudgetError(PtscatError, RuntimeError):
    """Evaluation budget exhausted."""


class ConfigError(PtscatError, ValueError):
    """Invalid run configuration."""


class ContourError(PtscatError, ArithmeticError):
    """A counting contour passes through (or numerically onto) a zero."""


class IllConditionedError(PtscatError, ValueError):
    """A least-squares fit has too little information to be trusted."""
