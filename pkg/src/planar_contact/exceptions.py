"""Exception hierarchy shared by all modules."""


class PlanarContactError(Exception):
    """Base class for every error raised by this package."""


class DomainError(PlanarContactError, ValueError):
    """An argument lies outside the domain of the operation."""


class SingularKernelError(DomainError):
    """Angular average requested with A <= |B|."""


class AtEigenvalueError(PlanarContactError, ArithmeticError):
    """The energy sits on (or numerically at) a pole of the resolvent."""


class PoleError(AtEigenvalueError):
    """E coincides with the bound-state pole -mu**2 of the limit resolvent."""


class InsufficientDataError(PlanarContactError, ValueError):
    """Too few points to fit a convergence rate."""


class GridDesignError(PlanarContactError, ValueError):
    """A momentum set is not closed under the pair sums the operator needs."""


class MixedConventionError(PlanarContactError, TypeError):
    """Objects built with different dispersion conventions were combined."""


class NumericalError(PlanarContactError, RuntimeError):
    """A linear solve or eigensolve failed or was too ill-conditioned."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class BracketError(PlanarContactError, ValueError):
    """An energy bracket does not cleanly enclose the requested crossings."""
