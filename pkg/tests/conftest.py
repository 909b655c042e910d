import pytest

from pvbpp.attacks import build_store
from pvbpp.netsim import seeded_entropy

SECRET = bytes(range(32))

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    num, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        passed = _criteria.get(num, (title, True))[1] and rep.outcome == "passed"
        _criteria[num] = (title, passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        title, passed = _criteria[num]
        terminalreporter.write_line(f"criterion {num:2d} {'PASS' if passed else 'FAIL'}  {title}")


@pytest.fixture
def secret():
    return SECRET


@pytest.fixture
def accounts():
    return [("alice", "hunter2"), ("bob", "correct horse"), ("carol", "pässwörd")]


@pytest.fixture
def store(accounts):
    return build_store(accounts)


@pytest.fixture
def entropy():
    return seeded_entropy(1234)
