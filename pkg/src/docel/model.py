"""DOCEL metamodel: events, typed objects, static and dynamic attributes.

All types are frozen. Mappings are exposed as read-only proxies and sequences
as tuples, so a :class:`DocelLog` can be shared between readers freely.
:func:`assemble` is the checked constructor; :func:`validate` inspects any
log, including corrupted ones read from disk, and reports findings as data.
"""

from __future__ import annotations

import re
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from functools import cached_property
from types import MappingProxyType

from docel.errors import (
    AmbiguousAttribute,
    DanglingEventFk,
    DanglingObjectFk,
    DuplicateId,
    EventWithoutObject,
    InvalidLog,
)

SCALAR_KINDS = ("text", "int", "real", "boolean", "timestamp")

ObjectRef = tuple[str, str]


# --- scalars and timestamps -------------------------------------------------

_TS_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})"
    r"(?:[T ](\d{2}):(\d{2})(?::(\d{2})(?:[.,](\d+))?)?)?"
    r"\s*(Z|z|[+-]\d{2}(?::?\d{2})?)?$"
)


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 date or date-time into an aware UTC datetime.

    Values without an offset are taken to be UTC. Fractions beyond
    microseconds are truncated.
    """
    m = _TS_RE.match(text.strip())
    if not m:
        raise ValueError(f"not an ISO-8601 timestamp: {text!r}")
    year, month, day, hh, mm, ss, frac, tz = m.groups()
    micro = int((frac or "0")[:6].ljust(6, "0"))
    dt = datetime(
        int(year), int(month), int(day), int(hh or 0), int(mm or 0), int(ss or 0), micro
    )
    if tz and tz not in ("Z", "z"):
        sign = -1 if tz[0] == "-" else 1
        digits = tz[1:].replace(":", "")
        offset = timedelta(hours=int(digits[:2]), minutes=int(digits[2:4] or 0))
        dt = dt.replace(tzinfo=timezone(sign * offset))
    else:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    """Render ``dt`` as ISO-8601 UTC with milliseconds (microseconds if needed)."""
    dt = to_utc(dt)
    base = dt.strftime("%Y-%m-%dT%H:%M:%S")
    if dt.microsecond % 1000 == 0:
        return f"{base}.{dt.microsecond // 1000:03d}Z"
    return f"{base}.{dt.microsecond:06d}Z"


def to_utc(dt: datetime) -> datetime:
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def scalar_kind(value) -> str:
    # bool first: it is a subclass of int
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "real"
    if isinstance(value, str):
        return "text"
    if isinstance(value, datetime):
        return "timestamp"
    raise TypeError(f"unsupported scalar {value!r} of type {type(value).__name__}")


@dataclass(frozen=True)
class AttributeValue:
    """One or more scalars of a single kind.

    A plain value is a one-element list; ``kind`` is derived and takes part in
    equality, so ``1`` and ``True`` never compare equal.
    """

    values: tuple
    kind: str = field(init=False)

    def __post_init__(self):
        values = tuple(self.values)
        if not values:
            raise ValueError("an attribute value needs at least one scalar")
        kinds = {scalar_kind(v) for v in values}
        if len(kinds) != 1:
            raise ValueError(f"mixed scalar kinds in one attribute value: {sorted(kinds)}")
        (kind,) = kinds
        if kind == "timestamp":
            values = tuple(to_utc(v) for v in values)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "kind", kind)

    @classmethod
    def of(cls, *values) -> AttributeValue:
        return cls(values)

    @property
    def is_list(self) -> bool:
        return len(self.values) > 1

    @property
    def scalar(self):
        """The single scalar; raises if the value is a list."""
        if len(self.values) != 1:
            raise ValueError("list-valued attribute has no single scalar")
        return self.values[0]

    def __repr__(self):
        inner = self.values[0] if len(self.values) == 1 else list(self.values)
        return f"AttributeValue({inner!r})"


def coerce_value(value) -> AttributeValue:
    if isinstance(value, AttributeValue):
        return value
    if isinstance(value, (list, tuple)):
        return AttributeValue(tuple(value))
    return AttributeValue((value,))


def attribute_map(attrs) -> Mapping[str, AttributeValue]:
    return MappingProxyType({str(k): coerce_value(v) for k, v in dict(attrs or {}).items()})


_DIGITS = re.compile(r"(\d+)")


def natural_key(identifier: str):
    """Total order on identifiers that sorts embedded numbers numerically.

    ``e2`` sorts before ``e10``; ties in numeric value (``e01`` vs ``e1``)
    fall back to plain string order.
    """
    parts = _DIGITS.split(identifier)
    return tuple(int(p) if i % 2 else p for i, p in enumerate(parts)), identifier


# --- tables -------------------------------------------------------------------


@dataclass(frozen=True)
class ObjectInstance:
    id: str
    static_attributes: Mapping[str, AttributeValue] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "static_attributes", attribute_map(self.static_attributes))


@dataclass(frozen=True)
class ObjectTypeTable:
    type_name: str
    schema: frozenset = frozenset()
    objects: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "schema", frozenset(self.schema))
        object.__setattr__(self, "objects", tuple(self.objects))

    @cached_property
    def by_id(self) -> Mapping[str, ObjectInstance]:
        return MappingProxyType({o.id: o for o in self.objects})


@dataclass(frozen=True)
class Event:
    id: str
    activity: str
    timestamp: datetime
    object_refs: Mapping[str, frozenset] = field(default_factory=dict)
    static_attributes: Mapping[str, AttributeValue] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "timestamp", to_utc(self.timestamp))
        refs = {t: frozenset(ids) for t, ids in dict(self.object_refs or {}).items()}
        object.__setattr__(
            self, "object_refs", MappingProxyType({t: ids for t, ids in refs.items() if ids})
        )
        object.__setattr__(self, "static_attributes", attribute_map(self.static_attributes))

    def references(self, obj: ObjectRef) -> bool:
        return obj[1] in self.object_refs.get(obj[0], ())

    def objects(self) -> list[ObjectRef]:
        """All referenced objects, sorted by type then id."""
        return [
            (t, oid)
            for t in sorted(self.object_refs)
            for oid in sorted(self.object_refs[t], key=natural_key)
        ]


def event_sort_key(event: Event):
    return event.timestamp, natural_key(event.id)


@dataclass(frozen=True)
class DynamicValueRow:
    value_id: str
    value: AttributeValue
    event_fk: str
    object_fk: ObjectRef

    def __post_init__(self):
        object.__setattr__(self, "value", coerce_value(self.value))
        object.__setattr__(self, "object_fk", tuple(self.object_fk))


@dataclass(frozen=True)
class DynamicAttributeTable:
    attribute_name: str
    owner_type: str
    rows: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))

    @property
    def key(self) -> tuple[str, str]:
        return self.owner_type, self.attribute_name


@dataclass(frozen=True)
class DocelLog:
    """The aggregate root.

    Constructing a ``DocelLog`` directly performs no cross-table checks; use
    :func:`assemble` for a checked, canonically ordered log.
    """

    events: tuple = ()
    object_tables: Mapping[str, ObjectTypeTable] = field(default_factory=dict)
    dynamic_tables: Mapping[tuple[str, str], DynamicAttributeTable] = field(default_factory=dict)
    event_attribute_schema: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "object_tables", MappingProxyType(dict(self.object_tables)))
        object.__setattr__(self, "dynamic_tables", MappingProxyType(dict(self.dynamic_tables)))
        object.__setattr__(self, "event_attribute_schema", frozenset(self.event_attribute_schema))

    @cached_property
    def event_index(self) -> Mapping[str, int]:
        """Event id -> position in ``events`` (first occurrence wins)."""
        index: dict[str, int] = {}
        for pos, ev in enumerate(self.events):
            index.setdefault(ev.id, pos)
        return MappingProxyType(index)

    def event(self, event_id: str) -> Event:
        return self.events[self.event_index[event_id]]

    def get_object(self, obj: ObjectRef) -> ObjectInstance | None:
        table = self.object_tables.get(obj[0])
        return None if table is None else table.by_id.get(obj[1])

    def dynamic_attributes_of(self, object_type: str) -> list[str]:
        return sorted(a for t, a in self.dynamic_tables if t == object_type)


# --- construction and validation ----------------------------------------------


@dataclass(frozen=True)
class Finding:
    rule: str
    ids: tuple
    message: str
    severity: str = "error"

    def as_dict(self) -> dict:
        return {"rule": self.rule, "severity": self.severity, "ids": list(self.ids), "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.findings

    def rules(self) -> set[str]:
        return {f.rule for f in self.findings}

    def __len__(self):
        return len(self.findings)

    def __iter__(self):
        return iter(self.findings)


_ERROR_FOR_RULE = {
    "DuplicateId": DuplicateId,
    "DanglingEventFk": DanglingEventFk,
    "DanglingObjectFk": DanglingObjectFk,
    "EventWithoutObject": EventWithoutObject,
    "AmbiguousAttribute": AmbiguousAttribute,
}


def _keyed(items, key) -> dict:
    if isinstance(items, Mapping):
        return dict(items)
    return {key(item): item for item in items}


def canonical_rows(rows: Iterable[DynamicValueRow], event_index: Mapping[str, int]) -> tuple:
    missing = len(event_index) + 1
    return tuple(
        sorted(
            rows,
            key=lambda r: (
                event_index.get(r.event_fk, missing),
                natural_key(r.object_fk[1]),
                natural_key(r.value_id),
            ),
        )
    )


def assemble(
    events: Iterable[Event] = (),
    object_tables: Mapping[str, ObjectTypeTable] | Iterable[ObjectTypeTable] = (),
    dynamic_tables: Mapping | Iterable[DynamicAttributeTable] = (),
    event_attribute_schema: Iterable[str] = (),
) -> DocelLog:
    """Build a checked DocelLog in canonical order.

    Events are sorted by (timestamp, event id) and dynamic rows by the
    position of the event that set them. Raises the :class:`ModelError`
    subclass matching the first finding; every finding is on ``.findings``.
    """
    ordered = sorted(events, key=event_sort_key)
    index: dict[str, int] = {}
    for pos, ev in enumerate(ordered):
        index.setdefault(ev.id, pos)
    dyn = _keyed(dynamic_tables, lambda t: t.key)
    dyn = {
        key: DynamicAttributeTable(t.attribute_name, t.owner_type, canonical_rows(t.rows, index))
        for key, t in sorted(dyn.items())
    }
    log = DocelLog(
        events=ordered,
        object_tables=dict(sorted(_keyed(object_tables, lambda t: t.type_name).items())),
        dynamic_tables=dyn,
        event_attribute_schema=event_attribute_schema,
    )
    raise_for_findings(validate(log).findings)
    return log


def raise_for_findings(findings) -> None:
    """Raise the ModelError subclass named by the first finding, if any."""
    if findings:
        raise _ERROR_FOR_RULE.get(findings[0].rule, InvalidLog)(findings)


def count_values(log: DocelLog) -> int:
    """Static object + static event + dynamic (attribute, value) pairs."""
    return (
        sum(len(o.static_attributes) for t in log.object_tables.values() for o in t.objects)
        + sum(len(e.static_attributes) for e in log.events)
        + sum(len(t.rows) for t in log.dynamic_tables.values())
    )


def validate(log: DocelLog) -> ValidationReport:
    """Check every DOCEL invariant; returns findings, never raises."""
    findings: list[Finding] = []

    def add(rule, ids, message):
        findings.append(Finding(rule, tuple(ids), message))

    # identifiers
    for eid, n in sorted(Counter(e.id for e in log.events).items()):
        if n > 1:
            add("DuplicateId", ("event", eid), f"event id {eid} used {n} times")
    for tname, table in log.object_tables.items():
        if table.type_name != tname:
            add("SchemaViolation", (tname,), f"object table under {tname!r} is named {table.type_name!r}")
        for oid, n in sorted(Counter(o.id for o in table.objects).items()):
            if n > 1:
                add("DuplicateId", ("object", f"{tname}:{oid}"), f"object id {tname}:{oid} used {n} times")
    for key, table in log.dynamic_tables.items():
        label = f"{key[0]}.{key[1]}"
        for vid, n in sorted(Counter(r.value_id for r in table.rows).items()):
            if n > 1:
                add("DuplicateId", ("value", f"{label}:{vid}"), f"value id {vid} used {n} times in {label}")

    # events
    for ev in log.events:
        if not ev.object_refs:
            add("EventWithoutObject", (ev.id,), f"event {ev.id} references no object")
        for otype in sorted(ev.object_refs):
            for oid in sorted(ev.object_refs[otype]):
                if log.get_object((otype, oid)) is None:
                    add("DanglingObjectFk", (ev.id, otype, oid), f"event {ev.id} references unknown object {otype}:{oid}")
        extra = set(ev.static_attributes) - log.event_attribute_schema
        for name in sorted(extra):
            add("SchemaViolation", (ev.id, name), f"event {ev.id} carries {name!r} outside the event attribute schema")
    for prev, cur in zip(log.events, log.events[1:]):
        if event_sort_key(cur) < event_sort_key(prev):
            add("EventOrder", (prev.id, cur.id), f"event {cur.id} is out of canonical order after {prev.id}")

    # objects
    for tname, table in log.object_tables.items():
        for obj in table.objects:
            for name in sorted(set(obj.static_attributes) - table.schema):
                add("SchemaViolation", (f"{tname}:{obj.id}", name), f"object {tname}:{obj.id} carries {name!r} outside its schema")

    # dynamic tables
    for key, table in log.dynamic_tables.items():
        label = f"{key[0]}.{key[1]}"
        if key != table.key:
            add("OwnerMismatch", (label,), f"dynamic table under {label} describes {table.owner_type}.{table.attribute_name}")
        if table.owner_type not in log.object_tables:
            add("OwnerMismatch", (label,), f"dynamic table {label} belongs to unknown object type {table.owner_type}")
        seen: set = set()
        for row in table.rows:
            otype, oid = row.object_fk
            event_ok = row.event_fk in log.event_index
            object_ok = log.get_object(row.object_fk) is not None
            if not event_ok:
                add("DanglingEventFk", (label, row.value_id, row.event_fk), f"{label} row {row.value_id} points at unknown event {row.event_fk}")
            if otype != table.owner_type:
                add("OwnerMismatch", (label, row.value_id), f"{label} row {row.value_id} points at a {otype} object")
            elif not object_ok:
                add("DanglingObjectFk", (label, row.value_id, f"{otype}:{oid}"), f"{label} row {row.value_id} points at unknown object {otype}:{oid}")
            if event_ok and object_ok and not log.event(row.event_fk).references(row.object_fk):
                add("UnlinkedDynamicRow", (label, row.value_id), f"event {row.event_fk} sets {label} of {otype}:{oid} without referencing it")
            pair = (row.event_fk, row.object_fk)
            if pair in seen:
                add("DuplicateSetting", (label, row.event_fk, f"{otype}:{oid}"), f"event {row.event_fk} sets {label} of {otype}:{oid} twice")
            seen.add(pair)

    # attribute-name disjointness
    all_dynamic = {a for (_, a) in log.dynamic_tables}
    for name in sorted(log.event_attribute_schema & all_dynamic):
        add("AmbiguousAttribute", (name,), f"{name!r} is both a static event attribute and a dynamic attribute")
    for tname, table in log.object_tables.items():
        for name in sorted(table.schema & set(log.dynamic_attributes_of(tname))):
            add("AmbiguousAttribute", (name, tname), f"{name!r} is both static and dynamic for {tname}")

    return ValidationReport(tuple(findings))
