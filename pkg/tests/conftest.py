import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from keepconn import assemble_p1, build_dual_graph, build_unit_square_mesh

settings.register_profile(
    "repo", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def mesh8():
    return build_unit_square_mesh(8)


@pytest.fixture(scope="session")
def mesh16():
    return build_unit_square_mesh(16)


@pytest.fixture(scope="session")
def mesh32():
    return build_unit_square_mesh(32)


@pytest.fixture(scope="session")
def ops16(mesh16):
    return assemble_p1(mesh16)


@pytest.fixture(scope="session")
def ops32(mesh32):
    return assemble_p1(mesh32)


@pytest.fixture(scope="session")
def graph32(mesh32):
    return build_dual_graph(mesh32)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# One line per acceptance criterion, collected by tests/test_acceptance.py and
# repeated at the end of the terminal report so it survives output capturing.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
