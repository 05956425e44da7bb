import numpy as np
import pytest

_ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def record_criterion():
    """Record a PASS/FAIL line for an acceptance criterion."""

    def _record(name: str, passed: bool, detail: str = ""):
        _ACCEPTANCE[name] = ("PASS" if passed else "FAIL") + (f"  {detail}" if detail else "")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: (len(s.split()[1]), s)):
        terminalreporter.write_line(f"{name}: {_ACCEPTANCE[name]}")
