"""Temporal queries over DOCEL logs and flattening back to one case notion."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

from docel.errors import (
    StaticAttributeQueried,
    UnknownAttribute,
    UnknownEvent,
    UnknownObject,
    UnknownObjectType,
)
from docel.model import AttributeValue, DocelLog, ObjectRef
from docel.xes import RawEvent, SingleCaseLog, Trace


@dataclass(frozen=True)
class HistoryEntry:
    event_id: str
    timestamp: datetime
    value: AttributeValue


@dataclass(frozen=True)
class AttributeHistory:
    object: ObjectRef
    attribute: str
    entries: tuple = ()

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def _require_object(log: DocelLog, obj: ObjectRef):
    if obj[0] not in log.object_tables:
        raise UnknownObject(f"unknown object type {obj[0]!r}")
    if log.get_object(obj) is None:
        raise UnknownObject(f"unknown object {obj[0]}:{obj[1]}")


def attribute_history(log: DocelLog, obj: ObjectRef, attribute: str) -> AttributeHistory:
    """Every value ``attribute`` of ``obj`` took, in canonical event order."""
    obj = tuple(obj)
    _require_object(log, obj)
    table = log.dynamic_tables.get((obj[0], attribute))
    if table is None:
        if attribute in log.object_tables[obj[0]].schema:
            raise StaticAttributeQueried(
                f"{attribute!r} is a static attribute of {obj[0]}; read it from the object table"
            )
        raise UnknownAttribute(f"{obj[0]} has no dynamic attribute {attribute!r}")
    index = log.event_index
    rows = sorted(
        (r for r in table.rows if r.object_fk == obj),
        key=lambda r: index[r.event_fk],
    )
    entries = tuple(HistoryEntry(r.event_fk, log.event(r.event_fk).timestamp, r.value) for r in rows)
    return AttributeHistory(obj, attribute, entries)


def value_at(log: DocelLog, obj: ObjectRef, attribute: str, at: str) -> AttributeValue | None:
    """Value of ``attribute`` right after event ``at`` happened, or None.

    A value holds from the event that set it until the next change.
    """
    if at not in log.event_index:
        raise UnknownEvent(f"unknown event {at!r}")
    limit = log.event_index[at]
    current = None
    for entry in attribute_history(log, obj, attribute).entries:
        if log.event_index[entry.event_id] > limit:
            break
        current = entry.value
    return current


def events_of_object(log: DocelLog, obj: ObjectRef) -> list[str]:
    obj = tuple(obj)
    _require_object(log, obj)
    return [e.id for e in log.events if e.references(obj)]


def flatten(log: DocelLog, object_type: str) -> SingleCaseLog:
    """Project ``log`` onto ``object_type``: one trace per object.

    Each event keeps its static attributes and gains the dynamic values it
    set on that object. References to objects of other types are dropped.
    """
    table = log.object_tables.get(object_type)
    if table is None:
        raise UnknownObjectType(f"unknown object type {object_type!r}")
    # (event id, object id) -> {attribute: value}
    set_by: dict[tuple[str, str], dict[str, AttributeValue]] = {}
    for (owner, attr), dyn in log.dynamic_tables.items():
        if owner != object_type:
            continue
        for r in dyn.rows:
            set_by.setdefault((r.event_fk, r.object_fk[1]), {})[attr] = r.value
    by_object: dict[str, list] = {o.id: [] for o in table.objects}
    for ev in log.events:
        for oid in ev.object_refs.get(object_type, ()):
            if oid in by_object:
                by_object[oid].append(ev)
    traces = []
    for obj in table.objects:
        events = []
        for ev in by_object[obj.id]:
            attrs = dict(ev.static_attributes)
            attrs.update(set_by.get((ev.id, obj.id), {}))
            events.append(RawEvent(ev.activity, ev.timestamp, attrs, ev.id))
        traces.append(Trace(obj.id, obj.static_attributes, events))
    return SingleCaseLog(object_type, traces)
