import numpy as np
import pytest

from ptscat.kernel import PerturbationSpec
from ptscat.perturbed import Problem

from oracle import ode_jost


@pytest.fixture(scope="session")
def box():
    return PerturbationSpec.box(-1.0, 1.0)


@pytest.fixture(scope="session")
def box_problem(box):
    return Problem(box, 1.0)


@pytest.fixture(scope="session")
def poly_q():
    # asymmetric, two pieces, nonzero slope on one of them
    return PerturbationSpec((-1.0, 0.25, 1.5), ((1.0, 0.5), (-0.7, 0.0, 0.3)))


@pytest.fixture(scope="session")
def poly_problem(poly_q):
    return Problem(poly_q, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ode():
    return ode_jost


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    def record(n: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
