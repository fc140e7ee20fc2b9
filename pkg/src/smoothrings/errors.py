"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class SmoothringsError(Exception):
    """Base class for every error raised by this package."""


class ArityMismatch(SmoothringsError):
    """A term mentions a generator index beyond the ambient arity."""


class NonFiniteResult(SmoothringsError):
    """Evaluation overflowed to inf/nan; the sample point must be discarded."""


class ParallelismViolation(SmoothringsError):
    """Coequalizer arguments do not share source and target."""


class SourceMismatch(SmoothringsError):
    """Pushout arguments do not share a source presentation."""


class UnsupportedDenominator(SmoothringsError):
    """Flattening requested for a fraction with a non-unit denominator."""


class CertificateRefuted(SmoothringsError):
    """A geometric counterexample contradicts the claimed certificate."""

    def __init__(self, message: str, witness: tuple[float, ...] | None = None):
        super().__init__(message)
        self.witness = witness


class CertificateNotFound(SmoothringsError):
    """Bounded certificate search exhausted without refutation; distinct from refuted."""


class NoSamplePointsFound(SmoothringsError):
    """Zero-set search produced no points (possibly a trivial ring)."""


class EnumerationOverflow(SmoothringsError):
    """A candidate space exceeded the configured enumeration budget."""


class RelationViolation(SmoothringsError):
    """A mapped solution fails the target relations beyond tolerance."""


class KindMismatch(SmoothringsError):
    """A workspace name is bound to an object of the wrong kind."""


class UnknownName(SmoothringsError):
    """A command referenced a name with no workspace binding."""


class SexprSyntaxError(SmoothringsError):
    """S-expression syntax error with position information."""

    def __init__(self, message: str, line: int, column: int, expected: str = ""):
        detail = f"{message} at line {line}, column {column}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)
        self.line = line
        self.column = column
        self.expected = expected
