import pytest

from hybridcache.params import reference_instance
from hybridcache.solver import solve_joint


@pytest.fixture(scope="session")
def ref_low():
    """Reference instance solved at alpha = 0.55."""
    return solve_joint(reference_instance(0.55))


@pytest.fixture(scope="session")
def ref_high():
    """Reference instance solved at alpha = 1.2."""
    return solve_joint(reference_instance(1.2))


_VERDICTS = {}


@pytest.fixture
def criterion():
    """``criterion(k, ok, detail)`` records the verdict of acceptance item ``k``.

    The verdicts are printed once each in a terminal summary section.
    """
    def record(k, ok, detail):
        _VERDICTS[k] = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_VERDICTS):
        terminalreporter.write_line(_VERDICTS[k])
