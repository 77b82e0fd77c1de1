"""Exception hierarchy for normaudit."""


class NormAuditError(Exception):
    """Base class for every error raised by this package."""


class EvaluationDomainError(NormAuditError):
    """A functional is undefined at the point it was asked to evaluate.

    Audits convert these into :class:`EvalFailed` carrying the offending
    group element.
    """


# quotient-core
class UnknownName(NormAuditError, KeyError):
    pass


class ConstraintViolated(NormAuditError, ValueError):
    pass


class NonFinite(EvaluationDomainError, ValueError):
    pass


class UnsupportedTag(NormAuditError, ValueError):
    pass


class NoDensity(EvaluationDomainError):
    pass


# audit-engine
class EvalFailed(NormAuditError):
    def __init__(self, message, element=None, cause=None):
        super().__init__(message)
        self.element = element
        self.cause = cause


class MissingContext(NormAuditError, KeyError):
    pass


# model-catalog
class DimMismatch(NormAuditError, ValueError):
    pass


class ZeroDenominator(EvaluationDomainError, ZeroDivisionError):
    pass


class OffGrid(NormAuditError, KeyError):
    pass


class DegenerateQuantiles(NormAuditError, ValueError):
    pass


class UnknownModel(NormAuditError, KeyError):
    pass


# chart-geometry
class ChartSingular(EvaluationDomainError):
    pass


class ZeroVector(EvaluationDomainError):
    pass


# singularity-probe
class DomainViolation(NormAuditError, ValueError):
    pass


class TrivialCocycle(NormAuditError, ValueError):
    pass


# spec-dsl
class ExprSyntaxError(NormAuditError):
    """Malformed expression text; ``offset`` is a byte offset into the UTF-8 source."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.reason = message
        self.offset = offset


class UnknownFunction(ExprSyntaxError):
    pass


class ArityError(ExprSyntaxError):
    pass


class UnboundIdentifier(NormAuditError, KeyError):
    pass


class DomainError(EvaluationDomainError, ValueError):
    pass


class SpecIOError(NormAuditError, OSError):
    pass


class SchemaError(NormAuditError, ValueError):
    pass


class ResolutionError(NormAuditError):
    def __init__(self, name, location=""):
        where = f" in {location}" if location else ""
        super().__init__(f"undefined identifier {name!r}{where}")
        self.name = name
        self.location = location
