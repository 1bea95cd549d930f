"""Exception hierarchy shared across the package.

Every error carries a short machine-readable ``code`` so CLI consumers and
tests can match on failure kind without parsing messages.
"""

from __future__ import annotations


class CknError(Exception):
    """Base class for all package errors."""

    code = "error"

    def __init__(self, message: str = "", **context):
        self.context = context
        if context:
            extra = ", ".join(f"{k}={v!r}" for k, v in context.items())
            message = f"{message} [{extra}]" if message else extra
        super().__init__(message or self.code)


class DegenerateDenominator(CknError):
    code = "degenerate-denominator"


class HardyDenominator(CknError):
    code = "hardy-denominator"


class BranchMismatch(CknError):
    code = "branch-mismatch"


class DivergentIntegral(CknError):
    code = "divergent-integral"


class ToleranceUnmet(CknError):
    """Quadrature budget exhausted; ``best`` and ``error`` hold the last estimate."""

    code = "tolerance-unmet"

    def __init__(self, message: str = "", best: float = float("nan"),
                 error: float = float("inf"), **context):
        self.best = best
        self.error = error
        super().__init__(message, best=best, error=error, **context)


class DivergentWeight(CknError):
    code = "divergent-weight"


class DivergentMoment(CknError):
    code = "divergent-moment"


class FamilyRegimeMismatch(CknError):
    code = "family-regime-mismatch"


class BadScale(CknError):
    code = "bad-scale"


class BadGrid(CknError):
    code = "bad-grid"


class NearSingularPoint(CknError):
    code = "near-singular-point"


class NotANorm(CknError):
    code = "not-a-norm"


class Unfittable(CknError):
    code = "unfittable"


class InvalidGammaArgument(CknError):
    code = "invalid-gamma-argument"


class NonFiniteValue(CknError):
    """A functional produced NaN/inf; aborted instead of propagating it."""

    code = "non-finite-value"
