"""Reading single-case-notion XES logs and classifying their attributes."""

from __future__ import annotations

import io
import re
import xml.etree.ElementTree as ET
from collections.abc import Mapping
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from types import MappingProxyType

from docel.errors import (
    ConflictingClassification,
    DuplicateAttribute,
    DuplicateTraceId,
    EmptyList,
    HeterogeneousList,
    InvalidMapping,
    InvalidValue,
    MissingActivity,
    MissingTimestamp,
    MissingTraceId,
    UnmappedLog,
    UnsupportedNesting,
    XmlSyntax,
)
from docel.model import AttributeValue, attribute_map, parse_timestamp, scalar_kind

CONCEPT_NAME = "concept:name"
TIMESTAMP = "time:timestamp"

_SCALAR_TAGS = {"string": "text", "id": "text", "int": "int", "float": "real", "boolean": "boolean", "date": "timestamp"}
_NESTED_TAGS = {"list", "container"}


@dataclass(frozen=True)
class RawEvent:
    activity: str
    timestamp: datetime
    attributes: Mapping[str, AttributeValue] = field(default_factory=dict)
    provisional_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "attributes", attribute_map(self.attributes))


@dataclass(frozen=True)
class Trace:
    trace_id: str
    trace_attributes: Mapping[str, AttributeValue] = field(default_factory=dict)
    events: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "trace_attributes", attribute_map(self.trace_attributes))
        object.__setattr__(self, "events", tuple(self.events))


@dataclass(frozen=True)
class SingleCaseLog:
    log_id: str
    traces: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "traces", tuple(self.traces))
        seen = set()
        for t in self.traces:
            if t.trace_id in seen:
                raise DuplicateTraceId(t.trace_id)
            seen.add(t.trace_id)

    @property
    def events(self):
        return [e for t in self.traces for e in t.events]


def count_attribute_values(log: SingleCaseLog, exclude=()) -> int:
    """Number of (attribute, value) pairs on traces and events.

    Identity fields (trace id, activity, timestamp) are not counted.
    """
    skip = set(exclude)
    n = 0
    for t in log.traces:
        n += sum(1 for k in t.trace_attributes if k not in skip)
        for e in t.events:
            n += sum(1 for k in e.attributes if k not in skip)
    return n


def provisional_id(log_id: str, ordinal: int, width: int = 4) -> str:
    return f"{log_id}/{ordinal:0{width}d}"


def ordinal_width(count: int) -> int:
    return max(4, len(str(max(count - 1, 0))))


# --- parsing ------------------------------------------------------------------


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _scalar(kind: str, key: str, raw: str | None):
    if raw is None:
        raise InvalidValue(key, kind, "<missing value>")
    try:
        if kind == "text":
            return raw
        if kind == "int":
            return int(raw)
        if kind == "real":
            return float(raw)
        if kind == "boolean":
            low = raw.strip().lower()
            if low not in ("true", "false"):
                raise ValueError(raw)
            return low == "true"
        return parse_timestamp(raw)
    except ValueError:
        raise InvalidValue(key, kind, raw) from None


def _read_attribute(elem: ET.Element) -> tuple[str, AttributeValue]:
    tag = _local(elem.tag)
    key = elem.get("key")
    if key is None:
        raise InvalidValue("<no key>", tag, "")
    if tag in _SCALAR_TAGS:
        if len(elem):
            raise UnsupportedNesting(key)
        return key, AttributeValue.of(_scalar(_SCALAR_TAGS[tag], key, elem.get("value")))
    if tag == "container":
        raise UnsupportedNesting(key)
    # list: children either directly or wrapped in <values>
    items = []
    for child in elem:
        ctag = _local(child.tag)
        children = list(child) if ctag == "values" else [child]
        for item in children:
            itag = _local(item.tag)
            if itag in _NESTED_TAGS or itag == "values" or len(item):
                raise UnsupportedNesting(key)
            if itag not in _SCALAR_TAGS:
                continue
            items.append(_scalar(_SCALAR_TAGS[itag], key, item.get("value")))
    if not items:
        raise EmptyList(key)
    if len({scalar_kind(v) for v in items}) > 1:
        raise HeterogeneousList(key)
    return key, AttributeValue(tuple(items))


def _read_attributes(elem: ET.Element) -> dict[str, AttributeValue]:
    attrs: dict[str, AttributeValue] = {}
    for child in elem:
        tag = _local(child.tag)
        if tag not in _SCALAR_TAGS and tag not in _NESTED_TAGS:
            continue
        key, value = _read_attribute(child)
        if key in attrs:
            raise DuplicateAttribute(key)
        attrs[key] = value
    return attrs


def _as_text(value: AttributeValue) -> str:
    v = value.values[0]
    return v if isinstance(v, str) else str(v)


def parse_xes(document, log_id: str) -> SingleCaseLog:
    """Parse an XES document (bytes, text or binary stream).

    Log-level attributes, ``<global>``, ``<extension>`` and ``<classifier>``
    declarations are ignored. Events are sorted by timestamp within each
    trace (stable, so equal timestamps keep document order).
    """
    if isinstance(document, str):
        document = document.encode("utf-8")
    if isinstance(document, (bytes, bytearray)):
        document = io.BytesIO(document)
    try:
        root = ET.parse(document).getroot()
    except ET.ParseError as exc:
        raise XmlSyntax(getattr(exc, "position", None), re.sub(r": line \d+, column \d+$", "", str(exc))) from None
    if _local(root.tag) != "log":
        raise XmlSyntax(None, f"root element is <{_local(root.tag)}>, expected <log>")

    raw_traces = []
    for t_index, t_elem in enumerate(c for c in root if _local(c.tag) == "trace"):
        t_attrs = _read_attributes(t_elem)
        if CONCEPT_NAME not in t_attrs:
            raise MissingTraceId(t_index)
        trace_id = _as_text(t_attrs.pop(CONCEPT_NAME))
        events = []
        for e_index, e_elem in enumerate(c for c in t_elem if _local(c.tag) == "event"):
            e_attrs = _read_attributes(e_elem)
            if CONCEPT_NAME not in e_attrs:
                raise MissingActivity(e_index, trace_id)
            ts = e_attrs.pop(TIMESTAMP, None)
            if ts is None:
                raise MissingTimestamp(e_index, trace_id)
            if ts.kind == "text":
                ts = AttributeValue.of(_scalar("timestamp", TIMESTAMP, ts.values[0]))
            if ts.kind != "timestamp" or ts.is_list:
                raise InvalidValue(TIMESTAMP, "timestamp", repr(ts))
            events.append((_as_text(e_attrs.pop(CONCEPT_NAME)), ts.scalar, e_attrs))
        events.sort(key=lambda e: e[1])
        raw_traces.append((trace_id, t_attrs, events))

    total = sum(len(ev) for _, _, ev in raw_traces)
    width = ordinal_width(total)
    ordinal = 0
    traces = []
    for trace_id, t_attrs, events in raw_traces:
        built = []
        for activity, ts, attrs in events:
            built.append(RawEvent(activity, ts, attrs, provisional_id(log_id, ordinal, width)))
            ordinal += 1
        traces.append(Trace(trace_id, t_attrs, built))
    return SingleCaseLog(log_id, traces)


def default_log_id(path) -> str:
    name = Path(path).name
    for suffix in (".xes.gz", ".xes", ".xml"):
        if name.lower().endswith(suffix):
            return name[: -len(suffix)]
    return Path(path).stem


def read_xes(path, log_id: str | None = None) -> SingleCaseLog:
    with open(path, "rb") as fh:
        return parse_xes(fh, log_id or default_log_id(path))


# --- classification ---------------------------------------------------------


@dataclass(frozen=True)
class MappingConfig:
    """User-supplied attribute classification.

    ``coalesce`` maps a regular expression with one numeric capture group
    (e.g. ``^Q(\\d+)$``) to a canonical attribute name; matching sibling
    attributes are merged into one list ordered by the captured number.
    """

    object_type_of_log: Mapping[str, str]
    static_event_attrs: frozenset = frozenset()
    object_linked_attrs: Mapping[str, str] = field(default_factory=dict)
    coalesce: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "object_type_of_log", MappingProxyType(dict(self.object_type_of_log)))
        object.__setattr__(self, "static_event_attrs", frozenset(self.static_event_attrs))
        object.__setattr__(self, "object_linked_attrs", MappingProxyType(dict(self.object_linked_attrs)))
        object.__setattr__(self, "coalesce", MappingProxyType(dict(self.coalesce)))
        both = self.static_event_attrs & set(self.object_linked_attrs)
        if both:
            name = sorted(both)[0]
            raise ConflictingClassification(name, "listed as static event attribute and as object-linked")
        owners: dict[str, str] = {}
        for log_id, otype in sorted(self.object_type_of_log.items()):
            if not otype:
                raise InvalidMapping(f"log {log_id!r} is mapped to an empty object type")
            if otype in owners:
                raise InvalidMapping(
                    f"logs {owners[otype]!r} and {log_id!r} both map to object type {otype!r}; "
                    "each XES log must describe exactly one object type"
                )
            owners[otype] = log_id
        for pattern in self.coalesce:
            try:
                if re.compile(pattern).groups != 1:
                    raise InvalidMapping(f"coalesce pattern {pattern!r} needs exactly one capture group")
            except re.error as exc:
                raise InvalidMapping(f"bad coalesce pattern {pattern!r}: {exc}") from None

    @property
    def object_types(self) -> list[str]:
        return sorted(set(self.object_type_of_log.values()))


@dataclass(frozen=True)
class AttributeTag:
    """Where an attribute goes: ``static_event``, ``static_object``,
    ``dynamic`` (owned by ``owner``) or ``reference`` (names an ``owner``
    object for cross-object dynamic values and is not stored as a value)."""

    kind: str
    owner: str | None = None


@dataclass(frozen=True)
class ClassifiedLog:
    log: SingleCaseLog
    object_type: str
    event_tags: Mapping[str, AttributeTag]
    trace_tags: Mapping[str, AttributeTag]

    @property
    def log_id(self) -> str:
        return self.log.log_id

    def occurrences(self):
        """Yield (trace_id, event or None, name, tag) for every attribute occurrence."""
        for t in self.log.traces:
            for name in t.trace_attributes:
                yield t.trace_id, None, name, self.trace_tags[name]
            for e in t.events:
                for name in e.attributes:
                    yield t.trace_id, e, name, self.event_tags[name]


def reference_attribute(object_type: str) -> str:
    return f"{object_type}:id"


def _coalesce(attrs: Mapping[str, AttributeValue], rules) -> dict[str, AttributeValue]:
    if not rules:
        return dict(attrs)
    out: dict[str, AttributeValue] = {}
    groups: dict[str, list] = {}
    for name, value in attrs.items():
        for pattern, canonical in rules:
            m = pattern.fullmatch(name)
            if m:
                try:
                    pos = int(m.group(1))
                except ValueError:
                    raise InvalidMapping(f"coalesce pattern {pattern.pattern!r} captured non-numeric {m.group(1)!r}") from None
                groups.setdefault(canonical, []).append((pos, name, value))
                break
        else:
            out[name] = value
    for canonical, parts in groups.items():
        if canonical in out:
            raise ConflictingClassification(canonical, "coalesced name collides with an existing attribute")
        values = [v for _, _, value in sorted(parts, key=lambda p: p[:2]) for v in value.values]
        if len({scalar_kind(v) for v in values}) > 1:
            raise HeterogeneousList(canonical)
        out[canonical] = AttributeValue(tuple(values))
    return out


def classify_attributes(log: SingleCaseLog, cfg: MappingConfig) -> ClassifiedLog:
    """Tag every trace and event attribute of ``log``.

    Trace attributes are static object attributes of the log's own type.
    Event attributes are static event attributes if listed as such, dynamic
    attributes of the configured owner if object-linked, references if named
    ``<Type>:id`` for a configured type, and otherwise dynamic attributes of
    the log's own type.
    """
    if log.log_id not in cfg.object_type_of_log:
        raise UnmappedLog(log.log_id)
    own = cfg.object_type_of_log[log.log_id]
    known = set(cfg.object_type_of_log.values())
    for name, owner in sorted(cfg.object_linked_attrs.items()):
        if owner not in known:
            raise ConflictingClassification(name, f"mapped to object type {owner!r}, which no log describes")
    refs = {reference_attribute(t): t for t in known}

    rules = [(re.compile(p), c) for p, c in sorted(cfg.coalesce.items())]
    if rules:
        log = SingleCaseLog(
            log.log_id,
            [
                Trace(
                    t.trace_id,
                    _coalesce(t.trace_attributes, rules),
                    [RawEvent(e.activity, e.timestamp, _coalesce(e.attributes, rules), e.provisional_id) for e in t.events],
                )
                for t in log.traces
            ],
        )

    trace_tags: dict[str, AttributeTag] = {}
    event_tags: dict[str, AttributeTag] = {}
    for t in log.traces:
        for name in t.trace_attributes:
            trace_tags[name] = AttributeTag("static_object", own)
        for e in t.events:
            for name in e.attributes:
                if name in event_tags:
                    continue
                if name in cfg.static_event_attrs:
                    tag = AttributeTag("static_event")
                elif name in cfg.object_linked_attrs:
                    tag = AttributeTag("dynamic", cfg.object_linked_attrs[name])
                elif name in refs:
                    tag = AttributeTag("reference", refs[name])
                else:
                    tag = AttributeTag("dynamic", own)
                event_tags[name] = tag
    return ClassifiedLog(log, own, MappingProxyType(event_tags), MappingProxyType(trace_tags))
