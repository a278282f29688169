"""Exception types shared across the package."""


class InfeasibleInstance(ValueError):
    """Cache budgets cannot hold one replica of every content."""


class NonConvergence(RuntimeError):
    """An iterative search stopped before meeting its tolerance."""

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class ZeroTotal(ValueError):
    """Some content has no replica at all, so its delay term is infinite."""


class MissingExponents(ValueError):
    """Scaling exponents (gamma, beta, delta) are required but absent."""


class NotApplicable(ValueError):
    """The asymptotic law is only stated for alpha < 3/2."""


class CapacityOverflow(ValueError):
    """Rounded replica counts do not fit the caches."""


class NoHolder(LookupError):
    """A requested content has no replica anywhere."""
