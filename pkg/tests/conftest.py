import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from surftex.heightfield import HeightField

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_field(rng, h, w, spacing=1.0):
    return HeightField(rng.normal(size=(h, w)), spacing)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance_report(request):
    """Record one verdict line per acceptance criterion; printed in the terminal summary."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def report(number, title, ok, detail, seconds, limit):
        in_time = seconds < limit
        verdict = "PASS" if ok and in_time else "FAIL"
        line = f"[{verdict}] {number:>2}. {title}: {detail} ({seconds:.2f} s, limit {limit:g} s)"
        lines.append((number, line))
        print(line)
        return ok and in_time

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
