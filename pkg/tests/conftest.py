import json
import time
from importlib import resources

import pytest

from lcbc.instance import LcbcInstance

_CRITERIA: dict[int, tuple[str, str, float]] = {}


def load_fixture(name: str) -> LcbcInstance:
    text = (resources.files("lcbc") / "fixtures" / f"{name}.json").read_text()
    return LcbcInstance.from_json(json.loads(text))


@pytest.fixture
def two_user():
    return load_fixture("fig1_k2")


@pytest.fixture
def toy():
    return load_fixture("toy_k4")


@pytest.fixture
def mds():
    return load_fixture("mds_k3")


class Clock:
    def __init__(self):
        self.start = time.perf_counter()

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.start


@pytest.fixture
def criterion(request):
    """Time an acceptance criterion and record its outcome for the summary."""
    number, title = request.node.get_closest_marker("criterion").args
    clock = Clock()
    yield clock
    elapsed = clock.elapsed
    rep = getattr(request.node, "rep_call", None)
    outcome = "PASS" if rep is not None and rep.passed else "FAIL"
    _CRITERIA[number] = (title, outcome, elapsed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, outcome, elapsed = _CRITERIA[n]
        tr.write_line(f"criterion {n}: {outcome}  ({elapsed:.2f}s)  {title}")
