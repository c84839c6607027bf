"""Exception hierarchy shared by all modules."""


class OTFlowError(Exception):
    """Base class for errors raised by otflow."""


class ResolutionError(OTFlowError, ValueError):
    """A feature is too narrow to be represented on the grid."""


class DegenerateDensityError(OTFlowError, ValueError):
    """A density vanishes where a strictly positive one is required."""


class FoldError(OTFlowError, ValueError):
    """A displacement map is not orientation preserving."""


class MarginalError(OTFlowError, ValueError):
    """Source and target weights do not carry the same total mass."""


class DomainError(OTFlowError, ValueError):
    """An energy or its derivatives is undefined at the given density."""


class OptimizationFailure(OTFlowError, RuntimeError):
    """An inner minimization did not produce an acceptable iterate."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class StepSizeError(OTFlowError, RuntimeError):
    """Time integration became unstable with the requested step."""
