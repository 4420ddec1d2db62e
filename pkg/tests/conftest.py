import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unit(rng, n=None):
    v = rng.normal(size=(3,) if n is None else (n, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


# Acceptance bookkeeping: the acceptance module runs last so it can read the
# outcomes of every other test, and each criterion leaves one summary line.

ACCEPTANCE_FILE = "test_acceptance.py"
OUTCOMES: dict[str, str] = {}
SESSION = {"first_start": None, "last_stop": None}
CRITERIA: list[str] = []


def pytest_collection_modifyitems(session, config, items):
    items.sort(key=lambda it: it.nodeid.split("::")[0].endswith(ACCEPTANCE_FILE))


def pytest_runtest_logreport(report):
    if report.nodeid.split("::")[0].endswith(ACCEPTANCE_FILE):
        return
    start, stop = getattr(report, "start", None), getattr(report, "stop", None)
    if start is not None:
        if SESSION["first_start"] is None or start < SESSION["first_start"]:
            SESSION["first_start"] = start
        SESSION["last_stop"] = max(SESSION["last_stop"] or stop, stop)
    prev = OUTCOMES.get(report.nodeid, "passed")
    if report.failed:
        OUTCOMES[report.nodeid] = "failed"
    elif report.when == "call" or report.skipped:
        OUTCOMES[report.nodeid] = report.outcome if prev == "passed" else prev


@pytest.fixture
def criterion():
    """Record one acceptance line; returns the verdict for asserting."""

    def record(name: str, ok: bool, detail: str = "") -> bool:
        CRITERIA.append(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))
        print(CRITERIA[-1])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
