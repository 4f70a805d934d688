import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tabinhibit.fretboard import FretboardConfig  # noqa: E402


@pytest.fixture
def default_fb():
    return FretboardConfig()


@pytest.fixture
def tiny_fb():
    # 2 strings, F=3 -> C=10
    return FretboardConfig(num_strings=2, num_frets=3, tuning=(40, 45))


def pytest_terminal_summary(terminalreporter):
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results, key=lambda k: int(k.split()[0])):
        ok, detail = results[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {key}: {detail}")
