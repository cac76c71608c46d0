import pytest

from shadowdb import Store
from shadowdb.ecid import build_ecid

FIXED = "2024-01-01T00:00:00Z"


@pytest.fixture(autouse=True)
def fixed_clock(monkeypatch):
    monkeypatch.setenv("SHADOW_FIXED_CLOCK", FIXED)


@pytest.fixture(scope="session")
def ecid_base():
    store = Store(clock=lambda: FIXED)
    fx = build_ecid(store)
    return store, fx


@pytest.fixture
def ecid(ecid_base):
    """A private fork of the ECID corpus plus its handles."""
    store, fx = ecid_base
    return store.fork(), fx


@pytest.fixture
def store():
    s = Store(clock=lambda: FIXED)
    pid = s.register_process("tester", ["test-rule"])
    s.use_process(pid)
    return s


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
