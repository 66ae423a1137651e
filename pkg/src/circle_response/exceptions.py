"""Exception types raised by the library."""


class NumericalError(RuntimeError):
    """A numerical procedure could not deliver a trustworthy result."""


class NotExpandingError(ValueError):
    """The map (or a perturbation of it) violates ``inf T' > 1``."""


class MarkovError(ValueError):
    """A piecewise-linear map does not have the Markov property."""


class SpectralGapError(NumericalError):
    """An eigenvalue is missing, not simple, or not separated from the rest."""


class UnsupportedEigenvalueError(NumericalError):
    """Complex isolated eigenvalues are outside the supported setting."""
