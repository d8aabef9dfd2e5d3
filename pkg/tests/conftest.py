import pytest
from hypothesis import HealthCheck, settings

from clickstream import synth

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line, then assert it."""
    def check(number: int, passed: bool, detail: str) -> None:
        _CRITERIA[number] = (bool(passed), detail)
        print(f"\nCRITERION {number}: {'PASS' if passed else 'FAIL'} - {detail}")
        assert passed, f"criterion {number}: {detail}"
    return check


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"CRITERION {number}: {'PASS' if passed else 'FAIL'} - {detail}")


@pytest.fixture(scope="session")
def small_trace():
    return synth.generate(synth.GenConfig(seed=3, n_browsers=6))


@pytest.fixture(scope="session")
def default_trace():
    return synth.generate(synth.GenConfig(seed=0))
