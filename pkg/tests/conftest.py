from functools import lru_cache
from pathlib import Path

import pytest

from xlaudit.loader import load_workbook

DATA = Path(__file__).parent / "data"

CORPUS = sorted(p.name for p in DATA.glob("*.json"))


@lru_cache(maxsize=None)
def fixture_model(name: str):
    return load_workbook(DATA / name)


@pytest.fixture
def playtime():
    return fixture_model("playtime5.json")


@pytest.fixture
def oct06(playtime):
    return playtime.sheet("Oct 06")


@pytest.fixture
def staffing():
    return fixture_model("staffing_old.json"), fixture_model("staffing_new.json")


def pytest_terminal_summary(terminalreporter):
    from tests.test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])
