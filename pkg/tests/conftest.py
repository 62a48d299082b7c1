import numpy as np
import pytest
from hypothesis import settings

from hjcrt import Grid, builtin_linear2d, builtin_pursuit

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.rstrip("abc")), k)):
        passed, detail = ACCEPTANCE_LINES[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def linear2d():
    return builtin_linear2d()


@pytest.fixture(scope="session")
def pursuit0():
    return builtin_pursuit(0.0)


@pytest.fixture(scope="session")
def pursuit01():
    return builtin_pursuit(0.1)


def linear_grid(n: int) -> Grid:
    return Grid((-2.0, -2.0), (2.0, 2.0), (n, n))


def pursuit_grid(n: int) -> Grid:
    return Grid((-5.0, -10.0, 0.0), (20.0, 10.0, 2 * np.pi), (n, n, n), (False, False, True))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="also run the full-resolution pursuit acceptance checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="full-resolution run; pass --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
