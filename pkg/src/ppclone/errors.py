"""Exception hierarchy shared by every ppclone module."""

from __future__ import annotations


class PpCloneError(Exception):
    """Base class for all errors raised by ppclone."""


class ArityMismatch(PpCloneError, ValueError):
    pass


class ElementOutOfRange(PpCloneError, ValueError):
    pass


class UnknownSymbol(PpCloneError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class SortMismatch(PpCloneError, ValueError):
    pass


class MissingTranslation(PpCloneError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class BudgetExhausted(PpCloneError, RuntimeError):
    """A budgeted search ran out of nodes before reaching a verdict."""


class DomainTooLarge(PpCloneError, ValueError):
    pass


class NotACongruence(PpCloneError, ValueError):
    pass


class NotInLattice(PpCloneError, ValueError):
    pass


class BadCoordinateSet(PpCloneError, ValueError):
    pass


BadCoordinate = BadCoordinateSet


class ArityTooLarge(PpCloneError, ValueError):
    pass


class NotInvariant(PpCloneError, ValueError):
    pass


class NoParallelogramProperty(PpCloneError, ValueError):
    pass


class NotTransitiveWithoutPP(PpCloneError, ValueError):
    pass


class ForbiddenInsideR(PpCloneError, ValueError):
    pass


class NotAffine(PpCloneError, ValueError):
    pass


class NotAPowerSort(PpCloneError, ValueError):
    pass


class UnrelatedSorts(PpCloneError, ValueError):
    pass


class NotSubdirect(PpCloneError, ValueError):
    pass


class PreconditionFailed(PpCloneError, ValueError):
    """A structural precondition does not hold; ``check`` names it."""

    def __init__(self, check: str, witness=None):
        super().__init__(f"precondition failed: {check}" + (f" (witness {witness!r})" if witness is not None else ""))
        self.check = check
        self.witness = witness


class RecursionInvariantBroken(PpCloneError, RuntimeError):
    pass


class NoEdgeTermFound(PpCloneError, ValueError):
    pass


class EmptyUnsupported(PpCloneError, ValueError):
    pass


class VerificationFailed(PpCloneError, RuntimeError):
    pass


class CertificateConstructionFailed(PpCloneError, RuntimeError):
    pass


class ParseError(PpCloneError, ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(loc + message)
        self.line = line
        self.column = column


class InvariantViolation(ParseError):
    pass
