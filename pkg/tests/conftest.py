import json
from pathlib import Path

import pytest

from zbdt import BdtLattice, ZbdtLattice, ZbdtParams

DATA = Path(__file__).parent / "data"
SCENARIOS = ("I", "II", "III", "IV", "V", "VI")
# published parameters of the rail model
PUBLISHED_PARAMS = ZbdtParams(p=0.02, q=0.07, x0=0.0025)


def load_tables():
    with open(DATA / "reference_tables.json") as fh:
        return json.load(fh)


def pct_levels(grid):
    return [[r / 100 for r in level] for level in grid]


@pytest.fixture(scope="session")
def tables():
    return load_tables()


@pytest.fixture(scope="session")
def published_bdt(tables):
    return {s: BdtLattice(pct_levels(tables[s]["bdt_rates"])) for s in SCENARIOS}


@pytest.fixture(scope="session")
def published_zbdt(tables):
    return {s: ZbdtLattice(pct_levels(tables[s]["zbdt_rates"]), PUBLISHED_PARAMS) for s in SCENARIOS}


# one verdict line per acceptance criterion, shown at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
