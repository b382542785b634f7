"""Exception hierarchy for the toolkit."""


class DiracNLSError(Exception):
    """Base class for all toolkit errors."""


class DegenerateInputError(DiracNLSError, ValueError):
    """Input with zero norm (or otherwise degenerate) where a ratio is required."""


class TruncationError(DiracNLSError, ValueError):
    """Plane-wave truncation too small for the potential."""


class NumericalError(DiracNLSError, RuntimeError):
    """An eigensolve failed; ``k`` records the offending quasimomentum."""

    def __init__(self, message, k=None):
        super().__init__(message)
        self.k = k


class DomainError(DiracNLSError, ValueError):
    """Evaluation requested at a point where the quantity is not smooth."""


class GapOpenError(DiracNLSError):
    """No degenerate band pair at k = pi: the point is not a Dirac point."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class SymmetryError(DiracNLSError):
    """The eigenspace is not invariant under parity (potential not even)."""


class GaugeError(DiracNLSError):
    """A gauge-fixed Bloch pair violates an identity it must satisfy."""


class StepSizeError(DiracNLSError, ValueError):
    """Time step violates a solver's resolution precondition."""


class BlowUpError(DiracNLSError):
    """Norm growth beyond the guard threshold; ``t`` is the detection time."""

    def __init__(self, message, t):
        super().__init__(message)
        self.t = t


class GridError(DiracNLSError, ValueError):
    """Grid incommensurate with the scale parameter epsilon."""


class SolvabilityError(DiracNLSError):
    """Corrector right-hand side has a kernel component: envelope is not an NLD solution."""
