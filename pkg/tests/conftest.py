import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ruledistill.extraction import ExtractionConfig, QTablePolicy  # noqa: E402
from ruledistill.gridworld import GridWorld, QParams, q_learn  # noqa: E402
from ruledistill.learner import LearnerConfig  # noqa: E402
from ruledistill.pipeline import phase1_distill  # noqa: E402


@pytest.fixture(scope="session")
def world():
    return GridWorld()


@pytest.fixture(scope="session")
def qtable(world):
    return q_learn(world, QParams(), seed=0)


@pytest.fixture(scope="session")
def policy(qtable):
    return QTablePolicy(qtable)


@pytest.fixture(scope="session")
def phase1(policy, world):
    """(rule list, training data) of the default phase-1 run."""
    return phase1_distill(policy, world, ExtractionConfig(), LearnerConfig(), seed=0)


# -- acceptance summary ---------------------------------------------------------

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria[n] = ("PASS" if report.passed else "FAIL", title)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        status, title = _criteria[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {title}")
