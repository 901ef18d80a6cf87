import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


# criterion number -> (passed, description); filled by test_acceptance
ACCEPTANCE_RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, text = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {text}")
