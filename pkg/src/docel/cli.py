"""``docel`` command line.

Exit codes: 0 success, 1 validation findings, 2 usage error, 3 I/O or parse
error. ``--format json`` prints a machine-readable report on stdout; human
messages go to stderr. ``DOCEL_COLOR=auto|never|always`` controls ANSI
styling of text reports.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from docel import io as dio
from docel.convert import convert_logs
from docel.errors import ConfigError, DocelError, ModelError, QueryError, XesError
from docel.model import count_values, format_timestamp, validate
from docel.query import attribute_history, events_of_object, flatten, value_at
from docel.xes import default_log_id, read_xes

EXIT_OK, EXIT_FINDINGS, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _color_enabled(stream) -> bool:
    mode = os.environ.get("DOCEL_COLOR", "auto").lower()
    if mode == "always":
        return True
    if mode == "never":
        return False
    return hasattr(stream, "isatty") and stream.isatty()


def _style(text: str, code: str, stream=None) -> str:
    stream = stream or sys.stdout
    return f"\033[{code}m{text}\033[0m" if _color_enabled(stream) else text


def _emit(args, payload: dict, text_lines: list[str]) -> None:
    if args.format == "json":
        sys.stdout.write(json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n")
    else:
        for line in text_lines:
            print(line)


def _parse_log_ids(pairs) -> dict[str, str]:
    out = {}
    for pair in pairs or []:
        name, sep, log_id = pair.partition("=")
        if not sep or not name or not log_id:
            raise UsageError(f"--log-id expects <name>=<id>, got {pair!r}")
        out[name] = log_id
    return out


def _object_arg(text: str) -> tuple[str, str]:
    otype, sep, oid = text.partition(":")
    if not sep or not otype or not oid:
        raise UsageError(f"--object expects <Type>:<id>, got {text!r}")
    return otype, oid


def _findings_lines(findings) -> list[str]:
    return [f"{_style(f.severity.upper(), '31;1')} {f.rule}: {f.message}" for f in findings]


# --- subcommands ------------------------------------------------------------------


def cmd_convert(args) -> int:
    overrides = _parse_log_ids(args.log_id)
    cfg = dio.load_mapping(args.map)
    logs = []
    used = set()
    for path in args.inputs:
        p = Path(path)
        log_id = next((overrides[k] for k in (path, p.name, default_log_id(p)) if k in overrides), None)
        used.update(k for k in (path, p.name, default_log_id(p)) if k in overrides)
        try:
            logs.append(read_xes(p, log_id))
        except XesError as exc:
            exc.stage = exc.stage or "parse"
            raise
    unused = set(overrides) - used
    if unused:
        raise UsageError(f"--log-id names no input: {sorted(unused)}")
    log = convert_logs(logs, cfg)
    dio.write_docel(log, args.output, csv_dir=args.csv_dir)
    _emit(
        args,
        {"output": str(args.output), "events": len(log.events), "objects": _object_counts(log), "values": count_values(log)},
        [f"wrote {args.output}: {len(log.events)} events, "
         f"{sum(len(t.objects) for t in log.object_tables.values())} objects, "
         f"{len(log.dynamic_tables)} dynamic tables"],
    )
    return EXIT_OK


def _object_counts(log) -> dict:
    return {t: len(table.objects) for t, table in sorted(log.object_tables.items())}


def cmd_validate(args) -> int:
    log = dio.read_docel(args.bundle, validate_log=False)
    report = validate(log)
    lines = _findings_lines(report.findings) or [_style("valid", "32")]
    _emit(args, {"valid": report.ok, "findings": [f.as_dict() for f in report.findings]}, lines)
    return EXIT_OK if report.ok else EXIT_FINDINGS


def cmd_inspect(args) -> int:
    log = dio.read_docel(args.bundle)
    shape = {
        "events": {"rows": len(log.events), "attributes": sorted(log.event_attribute_schema)},
        "objects": {
            t: {"rows": len(table.objects), "attributes": sorted(table.schema)} for t, table in sorted(log.object_tables.items())
        },
        "dynamic": {
            f"{owner}.{attr}": {"rows": len(table.rows)} for (owner, attr), table in sorted(log.dynamic_tables.items())
        },
    }
    lines = [f"events: {len(log.events)} rows; static attributes: {', '.join(sorted(log.event_attribute_schema)) or '-'}"]
    for t, table in sorted(log.object_tables.items()):
        lines.append(f"object type {t}: {len(table.objects)} rows; static attributes: {', '.join(sorted(table.schema)) or '-'}")
    for (owner, attr), table in sorted(log.dynamic_tables.items()):
        lines.append(f"dynamic {owner}.{attr}: {len(table.rows)} rows")
    _emit(args, shape, lines)
    return EXIT_OK


def _value_text(value) -> str:
    return json.dumps(dio.encode_value(value), ensure_ascii=False)


def cmd_query(args) -> int:
    log = dio.read_docel(args.bundle)
    obj = _object_arg(args.object)
    if args.attr is None:
        if args.at:
            raise UsageError("--at needs --attr")
        ids = events_of_object(log, obj)
        _emit(args, {"object": list(obj), "events": ids}, ids)
        return EXIT_OK
    if args.at:
        value = value_at(log, obj, args.attr, args.at)
        encoded = None if value is None else dio.encode_value(value)
        _emit(
            args,
            {"object": list(obj), "attribute": args.attr, "at": args.at, "value": encoded},
            ["<absent>" if value is None else _value_text(value)],
        )
        return EXIT_OK
    history = attribute_history(log, obj, args.attr)
    entries = [
        {"event": h.event_id, "timestamp": format_timestamp(h.timestamp), "value": dio.encode_value(h.value)}
        for h in history
    ]
    _emit(
        args,
        {"object": list(obj), "attribute": args.attr, "history": entries},
        [f"{e['event']}\t{e['timestamp']}\t{json.dumps(e['value'], ensure_ascii=False)}" for e in entries],
    )
    return EXIT_OK


def cmd_flatten(args) -> int:
    log = dio.read_docel(args.bundle)
    flat = flatten(log, args.type)
    text = dio.dumps_single_case(flat)
    if args.output:
        dio.atomic_write_text(args.output, text)
        print(f"wrote {args.output}: {len(flat.traces)} traces", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_export_ocel(args) -> int:
    log = dio.read_docel(args.bundle)
    document, loss = dio.export_ocel(log)
    dio.atomic_write_text(args.output, dio.dumps_ocel(document))
    lines = [f"wrote {args.output}: {len(document['ocel:events'])} events, {len(document['ocel:objects'])} objects"]
    lines.append(f"lost linkages: {len(loss.linkages)}; notes: {len(loss.notes)}")
    for link in loss.linkages:
        lines.append(f"  {link['event']} -> {link['object_type']}:{link['object']} ({link['attribute']})")
    _emit(args, {"output": str(args.output), "loss": loss.as_dict()}, lines)
    return EXIT_OK


# --- wiring ------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="docel", description="Data-aware object-centric event logs.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("convert", parents=[common], help="merge XES logs into one DOCEL bundle")
    p.add_argument("inputs", nargs="+", help="XES files, one object type each")
    p.add_argument("--map", required=True, help="mapping config (TOML)")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--log-id", action="append", metavar="NAME=ID", help="override the log id of an input")
    p.add_argument("--csv-dir", action="store_true", help="write a CSV directory instead of JSON")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("validate", parents=[common], help="report invariant violations")
    p.add_argument("bundle")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("inspect", parents=[common], help="print table shapes and schemas")
    p.add_argument("bundle")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("query", parents=[common], help="attribute history, value at an event, or events of an object")
    p.add_argument("bundle")
    p.add_argument("--object", required=True, metavar="TYPE:ID")
    p.add_argument("--attr")
    p.add_argument("--at", metavar="EVENT_ID")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("flatten", parents=[common], help="project onto one object type")
    p.add_argument("bundle")
    p.add_argument("--type", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_flatten)

    p = sub.add_parser("export-ocel", parents=[common], help="lossy export to OCEL JSON")
    p.add_argument("bundle")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_export_ocel)
    return parser


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"docel: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QueryError as exc:
        print(f"docel: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelError as exc:
        print(f"docel: invalid log: {exc}", file=sys.stderr)
        for line in _findings_lines(exc.findings):
            print(line, file=sys.stderr)
        return EXIT_FINDINGS
    except (DocelError, ConfigError, OSError) as exc:
        stage = f" [{exc.stage}]" if getattr(exc, "stage", None) else ""
        print(f"docel: error{stage}: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
