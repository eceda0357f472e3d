"""Exception hierarchy shared across the package.

Every error raised by optaudit derives from AuditError so callers can
catch one base class at CLI boundaries and map it to an exit code.
"""


class AuditError(Exception):
    """Base class for all optaudit errors."""


class SchemaError(AuditError):
    """A document does not conform to its declared structure."""


class CountMismatchError(SchemaError):
    """Taxonomy family or subcategory totals differ from the fixed layout."""


class UnknownLabelError(AuditError):
    """No taxonomy node matches the requested coordinates."""


class AmbiguousLabelError(AuditError):
    """Reserved: registry uniqueness makes this unreachable today."""


class UnresolvedReferenceError(SchemaError):
    """A case document references a variable, index set, or parameter
    that is never declared."""


class BackendError(AuditError):
    """Transport, credential, or protocol failure in a model backend."""


class FixtureMissError(BackendError):
    """Replay backend has no canned response for a request fingerprint."""


class ResponseParseError(AuditError):
    """A backend response is not structured output at all."""


class NotApplicableError(AuditError):
    """An injection recipe has no applicable site on the given case."""


class MissingGoldError(AuditError):
    """A prediction has no matching gold record."""


class EmptyCaseSetError(AuditError):
    """A metric was requested over zero cases."""


class NonFiniteValueError(AuditError):
    """A numeric comparison received NaN or infinity."""


class BenchmarkKindError(AuditError):
    """Gold file shape does not match the requested benchmark kind."""
