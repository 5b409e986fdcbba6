"""Serialization: DOCEL bundles (JSON or CSV directory), mapping configs, OCEL export.

Bundle layout (version ``docel/1``)::

    {
      "manifest": {
        "version": "docel/1",
        "event_attributes": {name: kind},
        "object_types": {type: {"static": {name: kind}, "dynamic": {name: kind}}},
        "tables": [table names]
      },
      "events":  [{"id", "activity", "timestamp", "objects": {type: [ids]}, "attributes": {...}}],
      "objects": {type: [{"id", "attributes": {...}}]},
      "dynamic": {type: {attribute: [{"value_id", "value", "event", "object"}]}}
    }

``kind`` is one of text/int/real/boolean/timestamp (``null`` when a column
holds no values). A value is written as a JSON scalar, or a JSON array when it
holds more than one scalar; timestamps are ISO-8601 UTC strings. Each column
holds a single kind.

The CSV form stores the same manifest as ``manifest.json`` (plus a ``files``
map from table name to file name) next to ``events.csv``,
``objects_<type>.csv`` and ``dyn_<type>_<attr>.csv``. Every cell except ids,
activity and timestamp is a JSON literal; an empty cell means absent.
"""

from __future__ import annotations

import csv
import io
import json
import os
import shutil
import tempfile
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import quote

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from docel.errors import (
    ConfigError,
    DecodeError,
    InvalidMapping,
    SchemaMismatch,
    UnsupportedVersion,
)
from docel.model import (
    AttributeValue,
    DocelLog,
    DynamicAttributeTable,
    DynamicValueRow,
    Event,
    ObjectInstance,
    ObjectTypeTable,
    assemble,
    format_timestamp,
    natural_key,
    parse_timestamp,
    raise_for_findings,
    validate,
)
from docel.xes import MappingConfig, SingleCaseLog

VERSION = "docel/1"

# --- values -------------------------------------------------------------------


def encode_value(value: AttributeValue):
    items = [format_timestamp(v) if value.kind == "timestamp" else v for v in value.values]
    return items[0] if len(items) == 1 else items


def _decode_scalar(raw, kind: str):
    if kind == "text" and isinstance(raw, str):
        return raw
    if kind == "int" and isinstance(raw, int) and not isinstance(raw, bool):
        return raw
    if kind == "real" and isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return float(raw)
    if kind == "boolean" and isinstance(raw, bool):
        return raw
    if kind == "timestamp" and isinstance(raw, str):
        return parse_timestamp(raw)
    raise ValueError(f"{raw!r} is not a {kind} value")


def decode_value(raw, kind: str | None) -> AttributeValue:
    if kind is None:
        raise ValueError("column declares no kind but holds a value")
    items = raw if isinstance(raw, list) else [raw]
    if not items:
        raise ValueError("empty value list")
    return AttributeValue(tuple(_decode_scalar(v, kind) for v in items))


def _column_kind(table: str, name: str, values) -> str | None:
    kinds = {v.kind for v in values}
    if len(kinds) > 1:
        raise SchemaMismatch(table, f"column {name!r} mixes kinds {sorted(kinds)}")
    return kinds.pop() if kinds else None


def _ids(ids) -> list[str]:
    return sorted(ids, key=natural_key)


# --- bundle <-> dict ------------------------------------------------------------


def _table_names(log: DocelLog) -> list[str]:
    names = ["events"]
    names += [f"objects/{t}" for t in sorted(log.object_tables)]
    names += [f"dynamic/{t}/{a}" for t, a in sorted(log.dynamic_tables)]
    return names


def build_manifest(log: DocelLog) -> dict:
    event_kinds = {
        name: _column_kind("events", name, [e.static_attributes[name] for e in log.events if name in e.static_attributes])
        for name in sorted(log.event_attribute_schema)
    }
    types = {}
    for tname in sorted(log.object_tables):
        table = log.object_tables[tname]
        static = {
            name: _column_kind(f"objects/{tname}", name, [o.static_attributes[name] for o in table.objects if name in o.static_attributes])
            for name in sorted(table.schema)
        }
        dynamic = {
            attr: _column_kind(f"dynamic/{tname}/{attr}", "value", [r.value for r in log.dynamic_tables[(tname, attr)].rows])
            for attr in log.dynamic_attributes_of(tname)
        }
        types[tname] = {"static": static, "dynamic": dynamic}
    for owner, attr in log.dynamic_tables:
        if owner not in log.object_tables:
            raise SchemaMismatch(f"dynamic/{owner}/{attr}", f"owner type {owner!r} has no object table")
    return {
        "version": VERSION,
        "event_attributes": event_kinds,
        "object_types": types,
        "tables": _table_names(log),
    }


def to_bundle(log: DocelLog) -> dict:
    """Plain-data form of ``log`` (the JSON bundle before encoding)."""
    manifest = build_manifest(log)
    events = [
        {
            "id": e.id,
            "activity": e.activity,
            "timestamp": format_timestamp(e.timestamp),
            "objects": {t: _ids(ids) for t, ids in sorted(e.object_refs.items())},
            "attributes": {k: encode_value(v) for k, v in sorted(e.static_attributes.items())},
        }
        for e in log.events
    ]
    objects = {
        tname: [
            {"id": o.id, "attributes": {k: encode_value(v) for k, v in sorted(o.static_attributes.items())}}
            for o in log.object_tables[tname].objects
        ]
        for tname in sorted(log.object_tables)
    }
    dynamic: dict[str, dict] = {t: {} for t in sorted(log.object_tables)}
    for (owner, attr), table in sorted(log.dynamic_tables.items()):
        rows = []
        for r in table.rows:
            if r.object_fk[0] != owner:
                raise SchemaMismatch(f"dynamic/{owner}/{attr}", f"row {r.value_id} points at a {r.object_fk[0]} object")
            rows.append({"value_id": r.value_id, "value": encode_value(r.value), "event": r.event_fk, "object": r.object_fk[1]})
        dynamic[owner][attr] = rows
    return {"manifest": manifest, "events": events, "objects": objects, "dynamic": dynamic}


def _need(mapping, key, table, kind=dict):
    if not isinstance(mapping, dict) or key not in mapping:
        raise SchemaMismatch(table, f"missing {key!r}")
    value = mapping[key]
    if not isinstance(value, kind):
        raise SchemaMismatch(table, f"{key!r} should be a {kind.__name__}")
    return value


def _check_manifest(manifest) -> None:
    if not isinstance(manifest, dict):
        raise SchemaMismatch("manifest", "not an object")
    if manifest.get("version") != VERSION:
        raise UnsupportedVersion(manifest.get("version"))
    _need(manifest, "event_attributes", "manifest")
    types = _need(manifest, "object_types", "manifest")
    for tname, spec in types.items():
        _need(spec, "static", f"manifest/{tname}")
        _need(spec, "dynamic", f"manifest/{tname}")


def _decode(path: str, where: str, raw, kind):
    try:
        return decode_value(raw, kind)
    except (ValueError, TypeError) as exc:
        raise DecodeError(path, where, str(exc)) from None


def from_bundle(bundle, path: str = "<bundle>") -> DocelLog:
    """Rebuild a DocelLog from plain data without any cross-table checks."""
    if not isinstance(bundle, dict):
        raise SchemaMismatch("bundle", "top level is not an object")
    manifest = _need(bundle, "manifest", "bundle")
    _check_manifest(manifest)
    event_kinds = manifest["event_attributes"]
    types = manifest["object_types"]
    declared = set(manifest.get("tables", _table_names_from_manifest(manifest)))
    expected = set(_table_names_from_manifest(manifest))
    if declared != expected:
        raise SchemaMismatch("manifest", f"table list disagrees with schemas: {sorted(declared ^ expected)}")

    events = []
    for i, row in enumerate(_need(bundle, "events", "bundle", list)):
        where = f"events[{i}]"
        try:
            ts = parse_timestamp(_need(row, "timestamp", where, str))
        except ValueError as exc:
            raise DecodeError(path, f"{where}.timestamp", str(exc)) from None
        attrs = {}
        for name, raw in _need(row, "attributes", where).items():
            if name not in event_kinds:
                raise SchemaMismatch("events", f"{where} carries undeclared attribute {name!r}")
            attrs[name] = _decode(path, f"{where}.attributes.{name}", raw, event_kinds[name])
        refs = _need(row, "objects", where)
        events.append(
            Event(_need(row, "id", where, str), _need(row, "activity", where, str), ts, {t: list(ids) for t, ids in refs.items()}, attrs)
        )

    objects_raw = _need(bundle, "objects", "bundle")
    dynamic_raw = _need(bundle, "dynamic", "bundle")
    object_tables = {}
    dynamic_tables = {}
    for tname, spec in types.items():
        static_kinds = spec["static"]
        objs = []
        for i, row in enumerate(objects_raw.get(tname, [])):
            where = f"objects.{tname}[{i}]"
            attrs = {}
            for name, raw in _need(row, "attributes", where).items():
                if name not in static_kinds:
                    raise SchemaMismatch(f"objects/{tname}", f"{where} carries undeclared attribute {name!r}")
                attrs[name] = _decode(path, f"{where}.attributes.{name}", raw, static_kinds[name])
            objs.append(ObjectInstance(_need(row, "id", where, str), attrs))
        object_tables[tname] = ObjectTypeTable(tname, set(static_kinds), objs)
        for attr, kind in spec["dynamic"].items():
            rows = []
            for i, row in enumerate(dynamic_raw.get(tname, {}).get(attr, [])):
                where = f"dynamic.{tname}.{attr}[{i}]"
                rows.append(
                    DynamicValueRow(
                        _need(row, "value_id", where, str),
                        _decode(path, f"{where}.value", _need(row, "value", where, object), kind),
                        _need(row, "event", where, str),
                        (tname, _need(row, "object", where, str)),
                    )
                )
            dynamic_tables[(tname, attr)] = DynamicAttributeTable(attr, tname, rows)
    extra_objects = set(objects_raw) - set(types)
    extra_dynamic = {(t, a) for t, attrs in dynamic_raw.items() for a in attrs} - set(dynamic_tables)
    if extra_objects or extra_dynamic:
        raise SchemaMismatch("manifest", f"tables not declared in manifest: {sorted(extra_objects) + sorted(extra_dynamic)}")
    return DocelLog(events, object_tables, dynamic_tables, set(event_kinds))


def _table_names_from_manifest(manifest) -> list[str]:
    types = manifest["object_types"]
    names = ["events"] + [f"objects/{t}" for t in sorted(types)]
    names += [f"dynamic/{t}/{a}" for t in sorted(types) for a in sorted(types[t]["dynamic"])]
    return names


def _checked(log: DocelLog, check: bool) -> DocelLog:
    if not check:
        return log
    raise_for_findings(validate(log).findings)
    return assemble(log.events, log.object_tables, log.dynamic_tables, log.event_attribute_schema)


# --- JSON ---------------------------------------------------------------------


def _json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def dumps_docel(log: DocelLog) -> str:
    return _json(to_bundle(log))


def loads_docel(text: str, validate_log: bool = True, path: str = "<string>") -> DocelLog:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DecodeError(path, (exc.lineno, exc.colno), exc.msg) from None
    return _checked(from_bundle(data, path), validate_log)


# --- CSV directory --------------------------------------------------------------


def _cell(value) -> str:
    return "" if value is None else json.dumps(value, ensure_ascii=False, sort_keys=True)


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _file_names(manifest: dict) -> dict[str, str]:
    files = {"events": "events.csv"}
    for tname, spec in manifest["object_types"].items():
        files[f"objects/{tname}"] = f"objects_{quote(tname, safe='')}.csv"
        for attr in spec["dynamic"]:
            files[f"dynamic/{tname}/{attr}"] = f"dyn_{quote(tname, safe='')}_{quote(attr, safe='')}.csv"
    return files


def _event_header(manifest) -> list[str]:
    return (
        ["id", "activity", "timestamp"]
        + [f"object:{t}" for t in sorted(manifest["object_types"])]
        + [f"attr:{a}" for a in sorted(manifest["event_attributes"])]
    )


def _object_header(manifest, tname) -> list[str]:
    return ["id"] + [f"attr:{a}" for a in sorted(manifest["object_types"][tname]["static"])]


DYNAMIC_HEADER = ["value_id", "value", "event_id", "object_id"]


def csv_tables(log: DocelLog) -> dict[str, str]:
    """File name -> file text for the CSV directory form of ``log``."""
    bundle = to_bundle(log)
    manifest = bundle["manifest"]
    files = _file_names(manifest)
    out = {"manifest.json": _json({**manifest, "files": files})}
    types = sorted(manifest["object_types"])
    attrs = sorted(manifest["event_attributes"])
    out[files["events"]] = _csv_text(
        _event_header(manifest),
        (
            [e["id"], e["activity"], e["timestamp"]]
            + [_cell(e["objects"].get(t)) for t in types]
            + [_cell(e["attributes"].get(a)) for a in attrs]
            for e in bundle["events"]
        ),
    )
    for tname in types:
        names = sorted(manifest["object_types"][tname]["static"])
        out[files[f"objects/{tname}"]] = _csv_text(
            _object_header(manifest, tname),
            ([o["id"]] + [_cell(o["attributes"].get(a)) for a in names] for o in bundle["objects"][tname]),
        )
        for attr, rows in bundle["dynamic"][tname].items():
            out[files[f"dynamic/{tname}/{attr}"]] = _csv_text(
                DYNAMIC_HEADER, ([r["value_id"], _cell(r["value"]), r["event"], r["object"]] for r in rows)
            )
    return out


def _read_csv(directory: Path, name: str, header: list[str], table: str) -> list[list[str]]:
    path = directory / name
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise SchemaMismatch(table, f"missing file {name}") from None
    except (csv.Error, UnicodeDecodeError) as exc:
        raise DecodeError(str(path), None, str(exc)) from None
    if not rows or rows[0] != header:
        raise SchemaMismatch(table, f"header {rows[0] if rows else []} != {header}")
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DecodeError(str(path), (n, None), f"expected {len(header)} cells, got {len(row)}")
    return rows[1:]


def _json_cell(path: Path, line: int, column: str, text: str):
    if text == "":
        return None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DecodeError(str(path), (line, column), exc.msg) from None


def read_csv_dir(directory, validate_log: bool = True) -> DocelLog:
    directory = Path(directory)
    try:
        manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise SchemaMismatch("manifest", f"{directory} has no manifest.json") from None
    except json.JSONDecodeError as exc:
        raise DecodeError(str(directory / "manifest.json"), (exc.lineno, exc.colno), exc.msg) from None
    _check_manifest(manifest)
    expected = _file_names(manifest)
    if manifest.get("files") != expected:
        raise SchemaMismatch("manifest", "file map does not match the declared tables")

    types = sorted(manifest["object_types"])
    attrs = sorted(manifest["event_attributes"])
    header = _event_header(manifest)
    events = []
    for n, row in enumerate(_read_csv(directory, expected["events"], header, "events"), start=2):
        path = directory / expected["events"]
        cells = dict(zip(header, row))
        objects = {}
        for t in types:
            ids = _json_cell(path, n, f"object:{t}", cells[f"object:{t}"])
            if ids is not None:
                objects[t] = ids
        values = {}
        for a in attrs:
            raw = _json_cell(path, n, f"attr:{a}", cells[f"attr:{a}"])
            if raw is not None:
                values[a] = raw
        events.append({"id": row[0], "activity": row[1], "timestamp": row[2], "objects": objects, "attributes": values})

    objects: dict[str, list] = {}
    dynamic: dict[str, dict] = {}
    for tname in types:
        name = expected[f"objects/{tname}"]
        header = _object_header(manifest, tname)
        objects[tname] = []
        for n, row in enumerate(_read_csv(directory, name, header, f"objects/{tname}"), start=2):
            values = {}
            for col, text in zip(header[1:], row[1:]):
                raw = _json_cell(directory / name, n, col, text)
                if raw is not None:
                    values[col[len("attr:"):]] = raw
            objects[tname].append({"id": row[0], "attributes": values})
        dynamic[tname] = {}
        for attr in manifest["object_types"][tname]["dynamic"]:
            name = expected[f"dynamic/{tname}/{attr}"]
            rows = []
            for n, row in enumerate(_read_csv(directory, name, DYNAMIC_HEADER, f"dynamic/{tname}/{attr}"), start=2):
                raw = _json_cell(directory / name, n, "value", row[1])
                rows.append({"value_id": row[0], "value": raw, "event": row[2], "object": row[3]})
            dynamic[tname][attr] = rows
    bundle = {"manifest": {k: v for k, v in manifest.items() if k != "files"}, "events": events, "objects": objects, "dynamic": dynamic}
    return _checked(from_bundle(bundle, str(directory)), validate_log)


# --- files ----------------------------------------------------------------------


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_dir(path, files: Mapping[str, str]) -> None:
    """Create directory ``path`` holding ``files``, replacing any previous one."""
    path = Path(path)
    tmp = Path(tempfile.mkdtemp(prefix=f".{path.name}.", dir=path.parent or "."))
    try:
        for name, text in files.items():
            with open(tmp / name, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        if path.exists():
            old = Path(tempfile.mkdtemp(prefix=f".{path.name}.old.", dir=path.parent or "."))
            os.rmdir(old)
            os.replace(path, old)
            os.replace(tmp, path)
            shutil.rmtree(old)
        else:
            os.replace(tmp, path)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def write_docel(log: DocelLog, sink, csv_dir: bool = False) -> None:
    """Write ``log`` to a path (JSON file or, with ``csv_dir``, a directory)
    or to a text stream (JSON only)."""
    if csv_dir:
        atomic_write_dir(sink, csv_tables(log))
    elif hasattr(sink, "write"):
        sink.write(dumps_docel(log))
    else:
        atomic_write_text(sink, dumps_docel(log))


def read_docel(source, validate_log: bool = True) -> DocelLog:
    """Read a bundle from a JSON file, a CSV directory or a text stream.

    With ``validate_log`` (the default) findings are raised as the matching
    :class:`~docel.errors.ModelError` and the result is canonically ordered.
    """
    if hasattr(source, "read"):
        return loads_docel(source.read(), validate_log)
    path = Path(source)
    if path.is_dir():
        return read_csv_dir(path, validate_log)
    return loads_docel(path.read_text(encoding="utf-8"), validate_log, str(path))


# --- mapping config ---------------------------------------------------------------


def parse_mapping(text: str) -> MappingConfig:
    """Read a mapping config from TOML text.

    ::

        [logs]                 # log id -> object type
        order = "Order"

        [static_event]
        attributes = ["Resource"]

        [object_linked]        # attribute -> owning object type
        Refund = "Order"

        [coalesce]             # optional: regex with one numeric group -> list attribute
        '^Q(\\d+)$' = "Quantity"
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"mapping config is not valid TOML: {exc}") from None
    unknown = set(data) - {"logs", "static_event", "object_linked", "coalesce"}
    if unknown:
        raise InvalidMapping(f"unknown mapping config sections: {sorted(unknown)}")
    logs = data.get("logs", {})
    static = data.get("static_event", {})
    linked = data.get("object_linked", {})
    coalesce = data.get("coalesce", {})
    if not isinstance(logs, dict) or not all(isinstance(v, str) for v in logs.values()):
        raise InvalidMapping("[logs] must map log ids to object type names")
    if not isinstance(static, dict) or set(static) - {"attributes"}:
        raise InvalidMapping("[static_event] takes a single 'attributes' list")
    attrs = static.get("attributes", [])
    if not isinstance(attrs, list) or not all(isinstance(a, str) for a in attrs):
        raise InvalidMapping("[static_event] attributes must be a list of names")
    for section, table in (("object_linked", linked), ("coalesce", coalesce)):
        if not isinstance(table, dict) or not all(isinstance(v, str) for v in table.values()):
            raise InvalidMapping(f"[{section}] must map names to strings")
    return MappingConfig(logs, frozenset(attrs), linked, coalesce)


def load_mapping(path) -> MappingConfig:
    return parse_mapping(Path(path).read_text(encoding="utf-8"))


def dump_mapping(cfg: MappingConfig) -> str:
    def q(s):
        return json.dumps(s, ensure_ascii=False)

    lines = ["[logs]"]
    lines += [f"{q(k)} = {q(v)}" for k, v in sorted(cfg.object_type_of_log.items())]
    lines += ["", "[static_event]", f"attributes = [{', '.join(q(a) for a in sorted(cfg.static_event_attrs))}]"]
    lines += ["", "[object_linked]"]
    lines += [f"{q(k)} = {q(v)}" for k, v in sorted(cfg.object_linked_attrs.items())]
    if cfg.coalesce:
        lines += ["", "[coalesce]"]
        lines += [f"{q(k)} = {q(v)}" for k, v in sorted(cfg.coalesce.items())]
    return "\n".join(lines) + "\n"


# --- flattened logs -----------------------------------------------------------------


def single_case_to_dict(log: SingleCaseLog) -> dict:
    return {
        "log_id": log.log_id,
        "traces": [
            {
                "id": t.trace_id,
                "attributes": {k: encode_value(v) for k, v in sorted(t.trace_attributes.items())},
                "events": [
                    {
                        "id": e.provisional_id,
                        "activity": e.activity,
                        "timestamp": format_timestamp(e.timestamp),
                        "attributes": {k: encode_value(v) for k, v in sorted(e.attributes.items())},
                    }
                    for e in t.events
                ],
            }
            for t in log.traces
        ],
    }


def dumps_single_case(log: SingleCaseLog) -> str:
    return _json(single_case_to_dict(log))


# --- OCEL export ----------------------------------------------------------------------


@dataclass(frozen=True)
class LossReport:
    """What an OCEL export cannot express.

    ``linkages`` lists every dynamic row's (event, object) binding, which
    OCEL drops; ``notes`` lists weaker losses such as list values stored as
    opaque values.
    """

    linkages: tuple = ()
    notes: tuple = ()

    @property
    def lossless(self) -> bool:
        return not self.linkages and not self.notes

    def as_dict(self) -> dict:
        return {"linkages": list(self.linkages), "notes": list(self.notes)}


def export_ocel(log: DocelLog) -> tuple[dict, LossReport]:
    """Map ``log`` onto OCEL 1.0 JSON (``ocel:events`` with omap/vmap,
    ``ocel:objects`` with ovmap).

    Dynamic values move into the vmap of the event that set them under
    ``<type>:<attribute>``; if one event sets the same attribute on several
    objects of a type the keys become ``<type>:<attribute>[<object id>]``.
    Object ids are written as-is unless two types share an id, in which case
    every object id is written as ``<type>:<id>``.
    """
    linkages = []
    notes = []
    all_ids = [oid for t in log.object_tables.values() for oid in (o.id for o in t.objects)]
    qualify = len(all_ids) != len(set(all_ids))
    if qualify:
        notes.append({"kind": "qualified-object-ids", "detail": "object ids repeat across types; written as <type>:<id>"})

    def oid_of(otype, oid):
        return f"{otype}:{oid}" if qualify else oid

    dyn_by_event: dict[str, list] = {}
    for (owner, attr), table in sorted(log.dynamic_tables.items()):
        for r in table.rows:
            dyn_by_event.setdefault(r.event_fk, []).append((owner, attr, r))
            linkages.append(
                {"event": r.event_fk, "object_type": owner, "object": r.object_fk[1], "attribute": attr, "value_id": r.value_id}
            )

    events = {}
    for e in log.events:
        vmap = {}
        for name, value in sorted(e.static_attributes.items()):
            vmap[name] = encode_value(value)
            if value.is_list:
                notes.append({"kind": "list-value", "event": e.id, "attribute": name})
        sets = dyn_by_event.get(e.id, [])
        per_key: dict[str, int] = {}
        for owner, attr, _ in sets:
            per_key[f"{owner}:{attr}"] = per_key.get(f"{owner}:{attr}", 0) + 1
        for owner, attr, r in sets:
            key = f"{owner}:{attr}"
            if per_key[key] > 1 or key in vmap:
                key = f"{owner}:{attr}[{r.object_fk[1]}]"
                notes.append({"kind": "disambiguated-key", "event": e.id, "attribute": key})
            vmap[key] = encode_value(r.value)
            if r.value.is_list:
                notes.append({"kind": "list-value", "event": e.id, "attribute": key})
        events[e.id] = {
            "ocel:activity": e.activity,
            "ocel:timestamp": format_timestamp(e.timestamp),
            "ocel:omap": [oid_of(t, oid) for t, oid in e.objects()],
            "ocel:vmap": vmap,
        }

    objects = {}
    for tname in sorted(log.object_tables):
        for o in log.object_tables[tname].objects:
            ovmap = {}
            for name, value in sorted(o.static_attributes.items()):
                ovmap[name] = encode_value(value)
                if value.is_list:
                    notes.append({"kind": "list-value", "object": oid_of(tname, o.id), "attribute": name})
            objects[oid_of(tname, o.id)] = {"ocel:type": tname, "ocel:ovmap": ovmap}

    names = sorted({k for ev in events.values() for k in ev["ocel:vmap"]} | {k for ob in objects.values() for k in ob["ocel:ovmap"]})
    document = {
        "ocel:global-log": {
            "ocel:version": "1.0",
            "ocel:ordering": "timestamp",
            "ocel:attribute-names": names,
            "ocel:object-types": sorted(log.object_tables),
        },
        "ocel:global-event": {"ocel:activity": "__INVALID__"},
        "ocel:global-object": {"ocel:type": "__INVALID__"},
        "ocel:events": events,
        "ocel:objects": objects,
    }
    return document, LossReport(tuple(linkages), tuple(notes))


def dumps_ocel(document: dict) -> str:
    return _json(document)


def count_ocel_values(document: dict) -> int:
    return sum(len(e["ocel:vmap"]) for e in document["ocel:events"].values()) + sum(
        len(o["ocel:ovmap"]) for o in document["ocel:objects"].values()
    )
