import csv
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


def read_fixture(name):
    with open(FIXTURES / name, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def by_model(rows):
    out = {}
    for row in rows:
        out.setdefault(row["model"], []).append(row)
    return out


@pytest.fixture
def fixture_rows():
    return read_fixture


FIGURE_NOTE = (
    "HISTORY OF PRESENT ILLNESS: The patient is a 43-year-old female who complains of "
    "left otalgia for 2 days. She has a history of migraine headaches.\n"
    "FAMILY HISTORY: Mother with diabetes.\n"
    "ALLEGIES: None.\n"
    "CURRENT MEDICATION: Imitrex.\n"
    "SOCIAL HISTORY: She is a nonsmoker and drinks socially.\n"
)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS, key=int):
        terminalreporter.write_line(mod.RESULTS[key])
