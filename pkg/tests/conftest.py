import re

import pytest

from dasplit.experiments import lemma3_experiment
from dasplit.surgery import build_example_map, build_linear_map, build_single_da, build_theorem_map

# criterion number -> detail string, filled by the acceptance tests
ACCEPTANCE_DETAILS = {}
_outcomes = {}


@pytest.fixture(scope="session")
def linear_map():
    return build_linear_map()


@pytest.fixture(scope="session")
def single_da():
    return build_single_da()


@pytest.fixture(scope="session")
def example_map():
    return build_example_map()


@pytest.fixture(scope="session")
def theorem_map():
    return build_theorem_map()


@pytest.fixture(scope="session")
def example_strict():
    return build_example_map(mode="strict")


@pytest.fixture(scope="session")
def theorem_strict():
    return build_theorem_map(mode="strict")


@pytest.fixture(scope="session")
def lemma3_report(example_map):
    return lemma3_experiment(example_map, n_samples=20, seed=0)


@pytest.fixture
def record():
    def _record(n, detail):
        ACCEPTANCE_DETAILS[n] = detail
    return _record


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call" or report.failed:
        prev = _outcomes.get(n, "PASS")
        _outcomes[n] = "FAIL" if (report.failed or prev == "FAIL") else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        detail = ACCEPTANCE_DETAILS.get(n, "no detail recorded")
        terminalreporter.write_line(f"criterion {n:2d}: {_outcomes[n]}  {detail}")
