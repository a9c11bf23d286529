import numpy as np
import pytest

from oracles import FIXTURES


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def mortgage_csv():
    return FIXTURES / "mortgage.csv"


_CRITERIA = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record and print a one-line verdict for an acceptance criterion."""
    lines = request.config.stash.setdefault(_CRITERIA, [])

    def report(number, ok, detail):
        verdict = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        line = f"criterion {number}: {verdict}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
