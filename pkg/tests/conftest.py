import contextlib
import re

import pytest

_LINES: list[str] = []


class _Criterion:
    def __init__(self, number: str, title: str):
        self.number, self.title = number, title
        self.details: list[str] = []

    def note(self, text: str) -> None:
        self.details.append(text)


@pytest.fixture
def criterion():
    """Context manager that records one PASS/FAIL line per acceptance criterion."""

    @contextlib.contextmanager
    def run(number: str, title: str):
        c = _Criterion(number, title)
        status = "FAIL"
        try:
            yield c
            status = "PASS"
        finally:
            detail = "; ".join(c.details)
            _LINES.append(f"[{status}] criterion {number}: {title}" + (f" ({detail})" if detail else ""))

    return run


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")

        def order(line):
            label = re.search(r"criterion (\d+)(\w*)", line)
            return int(label.group(1)), label.group(2)

        for line in sorted(_LINES, key=order):
            terminalreporter.write_line(line)
