"""Error hierarchy shared by every mtlab operation."""
from typing import Any

EXIT_VALIDATION = 2
EXIT_USAGE = 3
EXIT_NUMERICAL = 4


class MtlabError(Exception):
    """Base class; carries a CLI exit code and a machine-readable kind."""

    exit_code = EXIT_NUMERICAL
    kind = "numerical"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details = details

    def to_dict(self) -> dict:
        """Error object emitted by the CLI and the op dispatcher."""
        return {
            "kind": self.kind,
            "type": type(self).__name__,
            "message": str(self),
            "details": self.details,
        }


class UsageError(MtlabError):
    exit_code = EXIT_USAGE
    kind = "usage"


class ValidationFailure(MtlabError):
    exit_code = EXIT_VALIDATION
    kind = "validation"


class InvalidInput(ValidationFailure):
    """A precondition on a scalar argument failed."""


# ============================================
# Profile validity
# ============================================


class ProfileError(ValidationFailure):
    """A profile violates a structural invariant at a grid index."""

    def __init__(self, message: str, index: int):
        super().__init__(f"{message} (index {index})", index=index)
        self.index = index


class NonConvex(ProfileError):
    pass


class NonMonotone(ProfileError):
    pass


class BoundaryNotZero(ProfileError):
    pass


class InvalidGrid(ProfileError):
    pass


# ============================================
# Domain preconditions
# ============================================


class EpsTooSmall(ValidationFailure):
    pass


class DimensionMismatch(ValidationFailure):
    pass


class InfiniteEnergy(ValidationFailure):
    pass


class Divergent(ValidationFailure):
    pass


class NotNormalized(ValidationFailure):
    pass


class MassOutOfRange(ValidationFailure):
    def __init__(self, message: str, index: int | None = None, **details: Any):
        super().__init__(message, index=index, **details)
        self.index = index


class VolumeBoundViolated(ValidationFailure):
    def __init__(self, message: str, s: float):
        super().__init__(f"{message} at s={s!r}", s=s)
        self.s = s


class HypothesisFails(ValidationFailure):
    def __init__(self, message: str, point: float):
        super().__init__(f"{message} at {point!r}", point=point)
        self.point = point


# ============================================
# Numerical failure
# ============================================


class NoConvergence(MtlabError):
    """Iteration ended without meeting the residual contract."""

    def __init__(self, message: str, residual: float, iterate: Any = None, index: int | None = None):
        super().__init__(message, residual=residual, index=index)
        self.residual = residual
        self.iterate = iterate
        self.index = index
