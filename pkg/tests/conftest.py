import contextlib

import pytest

_LINES = []


@pytest.fixture
def criterion():
    """Context manager recording a PASS/FAIL line for an acceptance check."""

    @contextlib.contextmanager
    def record(label, detail=lambda: ""):
        try:
            yield
        except BaseException as exc:
            line = f"FAIL  {label}: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
            _LINES.append(line)
            print("\n" + line)
            raise
        line = f"PASS  {label}" + (f" ({detail()})" if detail() else "")
        _LINES.append(line)
        print("\n" + line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
