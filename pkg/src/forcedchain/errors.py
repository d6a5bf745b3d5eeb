"""Exception hierarchy for forcedchain."""


class ForcedChainError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(ForcedChainError, ValueError):
    """One or more model constraints are violated.

    Attributes
    ----------
    violations : list of Violation
        Every constraint that failed, not only the first one.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(f"{v.kind}: {v.message}" for v in self.violations)
        super().__init__(lines or "invalid model")

    @property
    def kinds(self):
        return {v.kind for v in self.violations}


class RegimeError(ForcedChainError, ValueError):
    """Asymptotic quantity requested outside the scaling regime b - a = 1/2, a <= 0, b >= 0."""


class SingularPivotError(ForcedChainError, ArithmeticError):
    """A pivot of the tridiagonal elimination vanished."""


class SingularSystemError(ForcedChainError, ArithmeticError):
    """A dense harmonic system could not be solved."""


class InvariantFailure(ForcedChainError, AssertionError):
    """A numerical invariant that must hold exactly did not.

    Attributes
    ----------
    where : object
        Offending index (row, entry, site) when one can be named.
    """

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(message if where is None else f"{message} (at {where})")


class NoConvergence(ForcedChainError, RuntimeError):
    """Fixed-point iteration hit its iteration cap."""


class NoPeriodicConvergence(NoConvergence):
    """The period map of the moment equations did not reach a fixed point."""


class ResonantDenominator(ForcedChainError, ZeroDivisionError):
    """A spectral denominator of the shifted Laplacian vanished."""
