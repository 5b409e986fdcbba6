"""Data-aware object-centric event logs (DOCEL) and conversion from XES."""

from docel.convert import (
    build_object_tables,
    build_per_log_tables,
    convert,
    convert_logs,
    link_and_finalize,
    merge_events,
)
from docel.io import export_ocel, load_mapping, parse_mapping, read_docel, write_docel
from docel.model import (
    AttributeValue,
    DocelLog,
    DynamicAttributeTable,
    DynamicValueRow,
    Event,
    ObjectInstance,
    ObjectTypeTable,
    assemble,
    validate,
)
from docel.query import attribute_history, events_of_object, flatten, value_at
from docel.xes import MappingConfig, classify_attributes, parse_xes, read_xes

__all__ = [
    "AttributeValue",
    "DocelLog",
    "DynamicAttributeTable",
    "DynamicValueRow",
    "Event",
    "MappingConfig",
    "ObjectInstance",
    "ObjectTypeTable",
    "assemble",
    "attribute_history",
    "build_object_tables",
    "build_per_log_tables",
    "classify_attributes",
    "convert",
    "convert_logs",
    "events_of_object",
    "export_ocel",
    "flatten",
    "link_and_finalize",
    "load_mapping",
    "merge_events",
    "parse_mapping",
    "parse_xes",
    "read_docel",
    "read_xes",
    "validate",
    "value_at",
    "write_docel",
]
