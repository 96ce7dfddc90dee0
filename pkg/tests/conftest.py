import json
from pathlib import Path

import pytest

from gridsnap.files import read_instance

FIXTURES = Path(__file__).parent / "fixtures"
CURATED = sorted((FIXTURES / "curated").glob("*.json"))


def load(name):
    return read_instance(FIXTURES / name).instance


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def read_json(path):
    return json.loads(Path(path).read_text())


_CRITERIA = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.failed:
        num = int(name.split("_")[2])
        note = dict(report.user_properties).get("note", "")
        ok = _CRITERIA.get(num, (True, ""))[0] and report.passed
        _CRITERIA[num] = (ok, note if report.passed else str(report.longrepr).splitlines()[-1])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(_CRITERIA):
        ok, note = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {note}")
