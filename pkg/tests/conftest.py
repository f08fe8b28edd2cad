import pytest

from agtractor import examples, weyl

ACCEPTANCE_RESULTS: dict = {}


@pytest.fixture(scope="session")
def flat3():
    return examples.flat_data(3)


@pytest.fixture(scope="session")
def flagship3():
    return examples.flagship(3)


@pytest.fixture(scope="session")
def flagship3_blocks(flagship3):
    return weyl.curvature_blocks(flagship3)


@pytest.fixture(scope="session")
def const_gamma3():
    return examples.constant_gamma(3, 0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, title = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {k:>2}: {title}")
