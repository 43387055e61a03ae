"""Shared test helpers and the acceptance-criterion summary."""

import numpy as np
import pytest

_ACCEPTANCE_RESULTS = []


def record_criterion(name: str, passed: bool, detail: str = "") -> None:
    """Log one acceptance criterion outcome for the terminal summary."""
    _ACCEPTANCE_RESULTS.append((name, passed, detail))


def check_criterion(name: str, passed: bool, detail: str = "") -> None:
    record_criterion(name, passed, detail)
    assert passed, f"{name} failed: {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        line = f"{status}  {name}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture
def np_rng():
    return np.random.default_rng(20240817)
