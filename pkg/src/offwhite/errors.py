"""Exception types raised across the package."""


class OffWhiteError(Exception):
    """Base class for all package errors."""


class SpecError(OffWhiteError, ValueError):
    """Malformed density description or run configuration."""


class TabulatedOutOfRange(OffWhiteError):
    pass


class NonPositive(OffWhiteError):
    pass


class NotDifferentiable(OffWhiteError):
    pass


class PoleMismatch(OffWhiteError):
    """Pole bookkeeping is inconsistent, or a density was evaluated at a pole."""


class EvaluationFailure(OffWhiteError):
    """An integrand raised or returned a non-finite value inside its domain."""


class NotConverged(OffWhiteError):
    pass


class NumericalBreakdown(OffWhiteError):
    pass


class Undecided(OffWhiteError):
    def __init__(self, k, message=""):
        super().__init__(message or f"angle decision undecided at k={k}")
        self.k = k


class ZeroDeclarationInvalid(OffWhiteError, ValueError):
    pass


class EmbeddingNotPSD(OffWhiteError):
    pass


class RankDeficient(OffWhiteError):
    pass
