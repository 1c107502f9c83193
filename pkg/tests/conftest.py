import numpy as np
import pytest

from cyclicproj import counterexample as ce


@pytest.fixture(scope="session")
def model12():
    return ce.build_model(12)


@pytest.fixture(scope="session")
def model40():
    return ce.build_model(40)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
