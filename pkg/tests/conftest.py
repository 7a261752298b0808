import pytest

_CRITERIA: dict = {}


@pytest.fixture
def record():
    """``record(key, passed, detail)`` stores one acceptance line."""
    def _record(key, passed, detail=""):
        _CRITERIA[key] = (bool(passed), detail)
        print(f"criterion {key}: {'PASS' if passed else 'FAIL'} {detail}")
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: (int(str(k).split('.')[0]), str(k))):
        ok, detail = _CRITERIA[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
