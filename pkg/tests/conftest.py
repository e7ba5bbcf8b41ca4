import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from random import Random  # noqa: E402

import pytest  # noqa: E402

from luauth import protocol  # noqa: E402

SEED = bytes(range(32))
T0 = 1_700_000_000_000


@pytest.fixture(scope="session")
def server16():
    return protocol.init_server(SEED, 16)


@pytest.fixture
def fresh_server():
    """A server with its own replay cache, safe to mutate."""
    def make(n=16, replay_cache=False, delta=protocol.DEFAULT_DELTA_T_MS):
        return protocol.init_server(SEED, n, delta_t_ms=delta, replay_cache_enabled=replay_cache)
    return make


@pytest.fixture
def alice(server16):
    return protocol.register(server16, "alice", b"correct horse", Random(1))


_acceptance: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::", 1)[1]
    if report.when == "call" or report.failed:
        if report.failed:
            _acceptance[name] = "FAIL"
        else:
            _acceptance.setdefault(name, "PASS" if report.passed else "SKIP")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        terminalreporter.write_line(f"{_acceptance[name]}  {name}")
