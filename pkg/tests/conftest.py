from __future__ import annotations

from pathlib import Path

import pytest

from bridgegan.harness.config import DEFAULT_DATASET
from bridgegan.smiles_io import load_dataset

# criterion lines collected by test_acceptance.py, echoed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def qm9_path() -> Path:
    return DEFAULT_DATASET


@pytest.fixture(scope="session")
def qm9_small(qm9_path):
    return load_dataset(qm9_path, limit=200)
