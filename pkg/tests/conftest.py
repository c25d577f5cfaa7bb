import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    """Record one pass/fail line per acceptance criterion."""

    def log(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append((number, line))
        print(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


def canonical(ranks):
    """Renumber arbitrary tier labels into gap-free tiers keeping their order."""
    _, inv = np.unique(np.asarray(ranks), return_inverse=True)
    return tuple(int(x) for x in inv.ravel())


@st.composite
def rankings(draw, n_a=None, min_n_a=1, max_n_a=6):
    if n_a is None:
        n_a = draw(st.integers(min_n_a, max_n_a))
    raw = draw(st.lists(st.integers(0, n_a - 1), min_size=n_a, max_size=n_a))
    return canonical(raw)


@st.composite
def ranking_samples(draw, n_a, min_size=1, max_size=12):
    size = draw(st.integers(min_size, max_size))
    return [draw(rankings(n_a=n_a)) for _ in range(size)]
