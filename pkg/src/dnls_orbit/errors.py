"""Exception hierarchy. Every failure the toolkit raises derives from DnlsError."""


class DnlsError(Exception):
    pass


class GridMismatchError(DnlsError, ValueError):
    pass


class OverflowGuardError(DnlsError):
    """A growing exponential would leave double-precision range."""


class ConvergenceError(DnlsError):
    pass


class NoEigenvalueError(ConvergenceError):
    pass


class EigenvalueOutOfRegionError(DnlsError):
    """The located root has Im z^2 <= 0."""


class SolvabilityError(DnlsError):
    pass


class DegenerateError(DnlsError):
    """A denominator, projection or coefficient vanished."""


class ContractionError(DnlsError):
    pass


class BlowUpError(DnlsError):
    pass


class ResidualError(DnlsError):
    """A consistency residual exceeded its tolerance."""


class InvariantViolation(DnlsError):
    pass


class PipelineError(DnlsError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
