"""Exception hierarchy shared across the protocol stack.

Fail-stop errors mark internal contract violations: if one fires, the
engine has a bug, and the run must not be trusted.  Budget errors are
normal outcomes of adaptive runs and carry the partial result.
"""


class FairsliceError(Exception):
    """Base class for all engine errors."""


class EndpointOutOfRange(FairsliceError):
    pass


class EndpointOutsidePiece(FairsliceError):
    pass


class TargetExceedsAvailable(FairsliceError):
    pass


class EmptyTrimSet(FairsliceError):
    pass


class UnknownPiece(FairsliceError):
    pass


class MalformedAssignment(FairsliceError):
    pass


class TooManyAgents(FairsliceError):
    pass


class ParseError(FairsliceError):
    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = "line %d: %s" % (line_no, message)
        super().__init__(message)
        self.line_no = line_no


class FailStopError(FairsliceError):
    """A protocol invariant that the correctness argument guarantees was
    violated at runtime.  Always a bug, never a recoverable condition."""


class BenchmarkInfeasible(FailStopError):
    pass


class NoMarginalAgent(FailStopError):
    pass


class SubCoreFailure(FailStopError):
    pass


class EmptyResidue(FairsliceError):
    pass


class CannotFormDivisions(FailStopError):
    pass


class InsufficientSnapshots(FairsliceError):
    pass


class BudgetExhausted(FairsliceError):
    """Raised when the adaptive query budget runs out.  `partial` holds the
    envy-free partial allocation achieved so far, when one exists."""

    def __init__(self, message="query budget exhausted", partial=None):
        super().__init__(message)
        self.partial = partial
