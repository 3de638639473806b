"""Exception types shared across the package."""

from __future__ import annotations


class MoiLabError(Exception):
    """Base class for all errors raised by this package."""


class NotHermitian(MoiLabError):
    pass


class NotNormal(MoiLabError):
    pass


class NotContraction(MoiLabError):
    pass


class ConvergenceFailure(MoiLabError):
    pass


class InvalidExponent(MoiLabError):
    pass


class InvalidPointCount(MoiLabError):
    pass


class InsufficientDerivatives(MoiLabError):
    pass


class DegenerateKnots(MoiLabError):
    """All knots coincide; the kernel degenerates to a point mass."""


class ArityMismatch(MoiLabError):
    pass


class DimensionMismatch(MoiLabError):
    pass


class NotAnalyticPolynomial(MoiLabError):
    pass


class NotTrigPolynomial(MoiLabError):
    pass


class NonUnitaryResult(MoiLabError):
    """Assembled dilation failed the unitarity check (defect-root conditioning)."""


class ClosedFormMismatch(MoiLabError):
    """Direct and closed-form remainder routes disagree beyond tolerance."""


class DilationTraceMismatch(MoiLabError):
    pass


class TupleBudgetExceeded(MoiLabError):
    pass


class PathLeavesContractions(MoiLabError):
    pass


class RankDeficientMoments(MoiLabError):
    """Moment system numerically rank-deficient; kernel coefficients zeroed."""


class ConfigError(MoiLabError):
    """Invalid experiment configuration or command-line usage."""
