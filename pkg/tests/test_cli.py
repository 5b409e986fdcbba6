import json
import shutil
import subprocess
import sys

import pytest

from conftest import RUNNING
from docel.cli import run

INPUTS = [str(RUNNING / f"{n}.xes") for n in ("order", "product", "customer")]
MAP = str(RUNNING / "map.toml")


@pytest.fixture
def bundle(tmp_path):
    out = tmp_path / "running.json"
    assert run(["convert", *INPUTS, "--map", MAP, "-o", str(out)]) == 0
    return out


def test_convert_writes_bundle(tmp_path, capsys):
    out = tmp_path / "b.json"
    assert run(["convert", *INPUTS, "--map", MAP, "-o", str(out)]) == 0
    assert json.loads(out.read_text())["manifest"]["version"] == "docel/1"
    assert "24 events" in capsys.readouterr().out


def test_convert_json_report(tmp_path, capsys):
    out = tmp_path / "b.json"
    assert run(["convert", *INPUTS, "--map", MAP, "-o", str(out), "--format", "json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report == {"output": str(out), "events": 24, "objects": {"Customer": 1, "Order": 1, "Product": 3}, "values": 38}


def test_convert_is_byte_deterministic(tmp_path):
    for name in ("a.json", "b.json"):
        assert run(["convert", *INPUTS, "--map", MAP, "-o", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_convert_csv_dir(tmp_path, capsys):
    out = tmp_path / "csv"
    assert run(["convert", *INPUTS, "--map", MAP, "-o", str(out), "--csv-dir"]) == 0
    assert (out / "events.csv").exists()
    capsys.readouterr()
    assert run(["query", str(out), "--object", "Order:o1", "--attr", "Refund"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 3


def test_log_id_override(tmp_path):
    renamed = tmp_path / "orders-2022.xes"
    shutil.copy(INPUTS[0], renamed)
    args = ["convert", str(renamed), INPUTS[1], INPUTS[2], "--map", MAP, "-o", str(tmp_path / "x.json")]
    assert run(args) == 3  # unmapped log id
    assert run(args + ["--log-id", "orders-2022=order"]) == 0
    assert run(args + ["--log-id", "nothing=order"]) == 2


def test_validate(bundle, capsys):
    assert run(["validate", str(bundle)]) == 0
    assert "valid" in capsys.readouterr().out


def test_validate_reports_findings(bundle, capsys):
    data = json.loads(bundle.read_text())
    data["dynamic"]["Order"]["Refund"][0]["event"] = "e404"
    bundle.write_text(json.dumps(data))
    assert run(["validate", str(bundle), "--format", "json"]) == 1
    report = json.loads(capsys.readouterr().out)
    assert report["valid"] is False
    assert [f["rule"] for f in report["findings"]] == ["DanglingEventFk"]
    # other commands refuse the bundle with the same exit code
    assert run(["inspect", str(bundle)]) == 1


def test_inspect(bundle, capsys):
    assert run(["inspect", str(bundle), "--format", "json"]) == 0
    shape = json.loads(capsys.readouterr().out)
    assert shape["objects"]["Product"] == {"rows": 3, "attributes": ["fragile", "product value"]}
    assert shape["dynamic"]["Order.Refund"] == {"rows": 3}


def test_query_history(bundle, capsys):
    assert run(["query", str(bundle), "--object", "Order:o1", "--attr", "Refund"]) == 0
    assert capsys.readouterr().out.splitlines() == [
        "e1\t2022-03-01T09:00:00.000Z\t0",
        "e15\t2022-03-04T11:00:00.000Z\t1",
        "e24\t2022-03-06T10:00:00.000Z\t0",
    ]


def test_query_value_at_and_events(bundle, capsys):
    assert run(["query", str(bundle), "--object", "Order:o1", "--attr", "Refund", "--at", "e15"]) == 0
    assert capsys.readouterr().out == "1\n"
    assert run(["query", str(bundle), "--object", "Order:o1", "--attr", "Shipping method", "--at", "e3"]) == 0
    assert capsys.readouterr().out == "<absent>\n"
    assert run(["query", str(bundle), "--object", "Customer:c1"]) == 0
    assert capsys.readouterr().out.split() == ["e13", "e14", "e23"]


@pytest.mark.parametrize(
    "extra",
    [
        ["--object", "Customer:c1", "--attr", "Refund"],
        ["--object", "Order:o9", "--attr", "Refund"],
        ["--object", "Product:p1", "--attr", "fragile"],
        ["--object", "o1"],
        ["--object", "Order:o1", "--at", "e1"],
    ],
)
def test_query_errors_are_usage_errors(bundle, extra, capsys):
    assert run(["query", str(bundle), *extra]) == 2
    assert capsys.readouterr().err.startswith("docel:")


def test_flatten(bundle, tmp_path, capsys):
    assert run(["flatten", str(bundle), "--type", "Customer"]) == 0
    flat = json.loads(capsys.readouterr().out)
    assert [e["activity"] for e in flat["traces"][0]["events"]] == ["receive package", "request refund", "receive refund"]
    out = tmp_path / "order.json"
    assert run(["flatten", str(bundle), "--type", "Order", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["log_id"] == "Order"
    assert run(["flatten", str(bundle), "--type", "Invoice"]) == 2


def test_export_ocel(bundle, tmp_path, capsys):
    out = tmp_path / "ocel.json"
    assert run(["export-ocel", str(bundle), "-o", str(out), "--format", "json"]) == 0
    doc = json.loads(out.read_text())
    assert doc["ocel:events"]["e3"]["ocel:vmap"]["Order:Value"] == 525.0
    assert len(json.loads(capsys.readouterr().out)["loss"]["linkages"]) == 6


def test_usage_errors(capsys):
    assert run([]) == 2
    assert run(["convert", "--map", MAP]) == 2
    assert run(["frobnicate"]) == 2
    assert run(["validate", "x", "--format", "yaml"]) == 2


def test_io_errors(tmp_path, capsys):
    assert run(["validate", str(tmp_path / "missing.json")]) == 3
    assert run(["convert", str(tmp_path / "missing.xes"), "--map", MAP, "-o", str(tmp_path / "o.json")]) == 3
    bad = tmp_path / "order.xes"
    bad.write_text("<log><trace>")
    capsys.readouterr()
    assert run(["convert", str(bad), "--map", MAP, "-o", str(tmp_path / "o.json")]) == 3
    assert "[parse]" in capsys.readouterr().err


def test_failure_leaves_no_output(tmp_path):
    bad = tmp_path / "order.xes"
    bad.write_text('<log><trace><string key="concept:name" value="o1"/><event/></trace></log>')
    out = tmp_path / "out.json"
    assert run(["convert", str(bad), INPUTS[1], INPUTS[2], "--map", MAP, "-o", str(out)]) == 3
    assert not out.exists()
    assert sorted(p.name for p in tmp_path.iterdir()) == ["order.xes"]


def test_color_control(bundle, capsys, monkeypatch):
    monkeypatch.setenv("DOCEL_COLOR", "always")
    run(["validate", str(bundle)])
    assert "\033[32m" in capsys.readouterr().out
    monkeypatch.setenv("DOCEL_COLOR", "never")
    run(["validate", str(bundle)])
    assert "\033[" not in capsys.readouterr().out


def test_console_entry_point(bundle):
    done = subprocess.run([sys.executable, "-m", "docel.cli", "inspect", str(bundle)], capture_output=True, text=True)
    assert done.returncode == 0
    assert done.stdout.startswith("events: 24 rows")
