"""Conversion of single-object-type XES logs into one DOCEL log.

The pipeline is parse -> classify -> object tables -> per-log event and
dynamic tables -> chronological merge -> object linking and id assignment.
Each stage is exposed on its own so it can be tested and reused.
"""

from __future__ import annotations

import heapq
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from datetime import datetime

from docel.errors import CrossObjectDynamic, DocelError, DuplicateObjectId, InvalidMapping
from docel.model import (
    AttributeValue,
    DocelLog,
    DynamicAttributeTable,
    DynamicValueRow,
    Event,
    ObjectInstance,
    ObjectRef,
    ObjectTypeTable,
    assemble,
    attribute_map,
    canonical_rows,
)
from docel.xes import ClassifiedLog, MappingConfig, classify_attributes, parse_xes, reference_attribute


@dataclass(frozen=True)
class EventRow:
    provisional_id: str
    activity: str
    timestamp: datetime
    static_attributes: Mapping[str, AttributeValue] = field(default_factory=dict)
    origin: ObjectRef | None = None  # the object of the trace the event came from

    def __post_init__(self):
        object.__setattr__(self, "static_attributes", attribute_map(self.static_attributes))


def row_key(row: EventRow):
    # provisional ids are zero-padded per log, so plain string order keeps a
    # log's own rows in ordinal order
    return row.timestamp, row.provisional_id


@dataclass(frozen=True)
class PerLogEventTable:
    log_id: str
    rows: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))


@dataclass(frozen=True)
class MergedEventTable:
    rows: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))


def build_object_tables(logs: Sequence[ClassifiedLog], cfg: MappingConfig | None = None) -> dict[str, ObjectTypeTable]:
    """One object type table per log, one object per trace.

    Trace attributes become the object's static attributes; the table schema
    is the union of the trace attribute names found in the log.
    """
    tables: dict[str, ObjectTypeTable] = {}
    for clog in logs:
        otype = clog.object_type
        if otype in tables:
            raise InvalidMapping(f"object type {otype!r} is produced by more than one input log")
        seen = set()
        objects = []
        schema: set[str] = set()
        for trace in clog.log.traces:
            if trace.trace_id in seen:
                raise DuplicateObjectId(otype, trace.trace_id)
            seen.add(trace.trace_id)
            objects.append(ObjectInstance(trace.trace_id, trace.trace_attributes))
            schema.update(trace.trace_attributes)
        tables[otype] = ObjectTypeTable(otype, schema, objects)
    return tables


def _foreign_object(event, owner: str, name: str) -> str:
    ref = event.attributes.get(reference_attribute(owner))
    if ref is None or ref.is_list:
        raise CrossObjectDynamic(name, owner, event.provisional_id)
    return str(ref.scalar)


def build_per_log_tables(clog: ClassifiedLog) -> tuple[PerLogEventTable, list[DynamicAttributeTable]]:
    """Split one classified log into its event table and dynamic table fragments.

    Fragment rows point at provisional event ids; value ids are
    ``<attribute>/<n>`` counted per attribute within the log.
    """
    own = clog.object_type
    rows: list[EventRow] = []
    fragments: dict[tuple[str, str], list[DynamicValueRow]] = defaultdict(list)
    for trace in clog.log.traces:
        origin = (own, trace.trace_id)
        for event in trace.events:
            statics = {}
            for name, value in event.attributes.items():
                tag = clog.event_tags[name]
                if tag.kind == "static_event":
                    statics[name] = value
                elif tag.kind == "dynamic":
                    oid = trace.trace_id if tag.owner == own else _foreign_object(event, tag.owner, name)
                    bucket = fragments[(tag.owner, name)]
                    bucket.append(DynamicValueRow(f"{name}/{len(bucket) + 1}", value, event.provisional_id, (tag.owner, oid)))
            rows.append(EventRow(event.provisional_id, event.activity, event.timestamp, statics, origin))
    rows.sort(key=row_key)
    tables = [DynamicAttributeTable(attr, owner, frag) for (owner, attr), frag in sorted(fragments.items())]
    return PerLogEventTable(clog.log_id, rows), tables


def merge_events(tables: Sequence[PerLogEventTable]) -> MergedEventTable:
    """Stable k-way merge of internally ordered per-log tables.

    Order is (timestamp, provisional id), then the position of the table in
    ``tables``.
    """
    streams = [[(row_key(r), i, r) for r in t.rows] for i, t in enumerate(tables)]
    return MergedEventTable(r for _, _, r in heapq.merge(*streams, key=lambda item: item[:2]))


def link_and_finalize(
    merged: MergedEventTable,
    fragments: Iterable[DynamicAttributeTable],
    object_tables: Mapping[str, ObjectTypeTable] | Iterable[ObjectTypeTable],
) -> DocelLog:
    """Attach objects to merged events, assign final ids and assemble the log.

    An event references the object of its originating trace plus every object
    whose dynamic attribute it sets. Final event ids are ``e<n>`` by merge
    position; dynamic value ids are renumbered ``<attribute>/<n>`` in
    canonical row order.
    """
    final_id = {row.provisional_id: f"e{pos}" for pos, row in enumerate(merged.rows, start=1)}
    refs: dict[str, dict[str, set]] = {pid: defaultdict(set) for pid in final_id}
    combined: dict[tuple[str, str], list[DynamicValueRow]] = defaultdict(list)
    for frag in fragments:
        for r in frag.rows:
            if r.event_fk in refs:
                refs[r.event_fk][r.object_fk[0]].add(r.object_fk[1])
            combined[frag.key].append(
                DynamicValueRow(r.value_id, r.value, final_id.get(r.event_fk, r.event_fk), r.object_fk)
            )

    events = []
    schema: set[str] = set()
    for row in merged.rows:
        row_refs = refs[row.provisional_id]
        if row.origin is not None:
            row_refs[row.origin[0]].add(row.origin[1])
        events.append(Event(final_id[row.provisional_id], row.activity, row.timestamp, row_refs, row.static_attributes))
        schema.update(row.static_attributes)

    position = {f"e{pos}": pos for pos in range(1, len(merged.rows) + 1)}
    dynamic = []
    for (owner, attr), rows in sorted(combined.items()):
        ordered = canonical_rows(rows, position)
        dynamic.append(
            DynamicAttributeTable(
                attr, owner, [DynamicValueRow(f"{attr}/{n}", r.value, r.event_fk, r.object_fk) for n, r in enumerate(ordered, 1)]
            )
        )
    return assemble(events, object_tables, dynamic, schema)


def _staged(stage: str, fn, *args):
    try:
        return fn(*args)
    except DocelError as exc:
        if exc.stage is None:
            exc.stage = stage
        raise


def convert_logs(logs, cfg: MappingConfig) -> DocelLog:
    """Run the pipeline on already parsed :class:`SingleCaseLog` values."""
    ids = [log.log_id for log in logs]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        err = InvalidMapping(f"log id {dupes[0]!r} is used by more than one input")
        err.stage = "classify"
        raise err
    classified = [_staged("classify", classify_attributes, log, cfg) for log in logs]
    objects = _staged("objects", build_object_tables, classified, cfg)
    per_log = [_staged("per-log", build_per_log_tables, c) for c in classified]
    merged = _staged("merge", merge_events, [t for t, _ in per_log])
    fragments = [f for _, frags in per_log for f in frags]
    return _staged("finalize", link_and_finalize, merged, fragments, objects)


def convert(inputs: Sequence[tuple[object, str]], cfg: MappingConfig) -> DocelLog:
    """Convert ``(document, log_id)`` pairs into one validated DocelLog.

    Errors raised by any stage carry the stage name on ``.stage``.
    """
    if not inputs:
        raise ValueError("convert needs at least one input log")
    logs = [_staged("parse", parse_xes, doc, log_id) for doc, log_id in inputs]
    return convert_logs(logs, cfg)
