import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from docel.io import load_mapping  # noqa: E402
from docel.convert import convert  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
RUNNING = FIXTURES / "running_example"
LOG_FILES = ("order", "product", "customer")

# criterion number -> (description, passed); filled by test_acceptance
ACCEPTANCE_RESULTS: dict = {}


@pytest.fixture(scope="session")
def running_cfg():
    return load_mapping(RUNNING / "map.toml")


@pytest.fixture(scope="session")
def running_inputs():
    return [((RUNNING / f"{name}.xes").read_bytes(), name) for name in LOG_FILES]


@pytest.fixture(scope="session")
def running_log(running_inputs, running_cfg):
    return convert(running_inputs, running_cfg)


@pytest.fixture(scope="session")
def golden():
    return json.loads((RUNNING / "golden.json").read_text())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        text, passed = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {text}")
