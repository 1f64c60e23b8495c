import contextlib
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Context manager that records one PASS/FAIL line per acceptance criterion."""

    @contextlib.contextmanager
    def record(number: int, title: str):
        details: list[str] = []
        try:
            yield details
        except BaseException as exc:
            _CRITERIA[number] = f"criterion {number:2d} FAIL  {title}: {exc}".splitlines()[0]
            raise
        _CRITERIA[number] = f"criterion {number:2d} PASS  {title}" + (f" ({'; '.join(details)})" if details else "")

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
