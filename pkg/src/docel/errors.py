"""Exception hierarchy shared by every docel module."""

from __future__ import annotations


class DocelError(Exception):
    """Base class for all errors raised by this package.

    ``stage`` is filled in by :func:`docel.convert.convert` with the pipeline
    step that raised the error (``parse``, ``classify``, ``objects``,
    ``per-log``, ``merge`` or ``finalize``).
    """

    stage: str | None = None


# --- XES ingest -----------------------------------------------------------


class XesError(DocelError):
    pass


class XmlSyntax(XesError):
    def __init__(self, position: tuple[int, int] | None, detail: str = ""):
        self.position = position
        where = f" at line {position[0]}, column {position[1]}" if position else ""
        super().__init__(f"malformed XML{where}: {detail}".rstrip(": "))


class MissingTimestamp(XesError):
    def __init__(self, index: int, trace_id: str | None = None):
        self.index = index
        self.trace_id = trace_id
        super().__init__(f"event #{index} in trace {trace_id!r} has no time:timestamp")


class MissingActivity(XesError):
    def __init__(self, index: int, trace_id: str | None = None):
        self.index = index
        self.trace_id = trace_id
        super().__init__(f"event #{index} in trace {trace_id!r} has no concept:name")


class MissingTraceId(XesError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"trace #{index} has no concept:name")


class DuplicateTraceId(XesError):
    def __init__(self, trace_id: str):
        self.trace_id = trace_id
        super().__init__(f"trace id {trace_id!r} occurs more than once")


class UnsupportedNesting(XesError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"attribute {name!r} nests containers deeper than one list level")


class HeterogeneousList(XesError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"list attribute {name!r} mixes scalar kinds")


class DuplicateAttribute(XesError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"attribute key {name!r} appears twice on one element")


class EmptyList(XesError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"list attribute {name!r} has no values")


class InvalidValue(XesError):
    def __init__(self, name: str, kind: str, raw: str):
        self.name = name
        self.kind = kind
        self.raw = raw
        super().__init__(f"attribute {name!r}: cannot read {raw!r} as {kind}")


# --- mapping config -------------------------------------------------------


class ConfigError(DocelError):
    pass


class ConflictingClassification(ConfigError):
    def __init__(self, name: str, detail: str = ""):
        self.name = name
        super().__init__(f"attribute {name!r} cannot be classified" + (f": {detail}" if detail else ""))


class InvalidMapping(ConfigError):
    pass


class UnmappedLog(ConfigError):
    def __init__(self, log_id: str):
        self.log_id = log_id
        super().__init__(f"mapping config assigns no object type to log {log_id!r}")


# --- conversion -----------------------------------------------------------


class ConversionError(DocelError):
    pass


class DuplicateObjectId(ConversionError):
    def __init__(self, object_type: str, object_id: str):
        self.object_type = object_type
        self.object_id = object_id
        super().__init__(f"object {object_type}:{object_id} is defined twice")


class CrossObjectDynamic(ConversionError):
    def __init__(self, name: str, owner: str, event: str):
        self.name = name
        self.owner = owner
        self.event = event
        super().__init__(
            f"event {event} sets {name!r} of a {owner} object but carries no "
            f"'{owner}:id' attribute naming which one"
        )


# --- model validation -----------------------------------------------------


class ModelError(DocelError):
    """A log violates one or more DOCEL invariants.

    ``findings`` holds every violation found, not only the one that named the
    exception class.
    """

    def __init__(self, findings):
        self.findings = tuple(findings)
        head = self.findings[0].message if self.findings else "invalid log"
        extra = len(self.findings) - 1
        super().__init__(head + (f" (+{extra} more)" if extra > 0 else ""))


class DanglingEventFk(ModelError):
    pass


class DanglingObjectFk(ModelError):
    pass


class DuplicateId(ModelError):
    pass


class AmbiguousAttribute(ModelError):
    pass


class EventWithoutObject(ModelError):
    pass


class InvalidLog(ModelError):
    pass


# --- queries --------------------------------------------------------------


class QueryError(DocelError, LookupError):
    pass


class UnknownObject(QueryError):
    pass


class UnknownObjectType(QueryError):
    pass


class UnknownAttribute(QueryError):
    pass


class UnknownEvent(QueryError):
    pass


class StaticAttributeQueried(QueryError):
    pass


# --- bundles --------------------------------------------------------------


class BundleError(DocelError):
    pass


class UnsupportedVersion(BundleError):
    def __init__(self, version):
        self.version = version
        super().__init__(f"unsupported bundle version {version!r}")


class SchemaMismatch(BundleError):
    def __init__(self, table: str, detail: str):
        self.table = table
        super().__init__(f"{table}: {detail}")


class DecodeError(BundleError):
    def __init__(self, path: str, position, detail: str):
        self.path = path
        self.position = position
        super().__init__(f"{path} at {position}: {detail}")
