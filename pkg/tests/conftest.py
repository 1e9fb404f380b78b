import sys
from contextlib import contextmanager
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


class _Note:
    detail = ""


@pytest.fixture
def criterion():
    """Record one acceptance criterion: PASS if the block finishes, FAIL if it raises."""

    @contextmanager
    def record(number, title):
        note = _Note()
        try:
            yield note
        except BaseException:
            _ACCEPTANCE[number] = (title, False, note.detail)
            raise
        _ACCEPTANCE[number] = (title, True, note.detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[number]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
