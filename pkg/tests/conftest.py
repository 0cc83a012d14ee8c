import pytest

from _support import two_node
from finstab.seeding import DEFAULT_SEED
from finstab.sweep import ParamGrid, enumerate_grid, run_sweep

_ACCEPTANCE = []


@pytest.fixture
def two_node_net():
    return two_node()


@pytest.fixture(scope="session")
def reduced_results():
    """One reduced-grid sweep at the default root seed, shared across modules."""
    return run_sweep(enumerate_grid(ParamGrid.reduced()), 10, DEFAULT_SEED)


@pytest.fixture
def criterion():
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(cid, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} C{cid}: {detail}"
        _ACCEPTANCE.append((cid, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE, key=lambda item: item[0]):
            terminalreporter.write_line(line)
