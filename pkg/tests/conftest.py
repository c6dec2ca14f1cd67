import time

import numpy as np
import pytest

from tracephase.domain import HalfSpaceGrid
from tracephase.model import standard_well
from tracephase.solver import SolveOptions, minimize, planar_interface

ACCEPTANCE_LINES = []


def record(criterion: str, passed: bool, detail: str):
    line = f"{criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def planar_grid():
    return HalfSpaceGrid(2, 0.25, (513, 257), (-64.0, 0.0))


@pytest.fixture(scope="session")
def planar_run(planar_grid):
    """Converged planar-interface minimizer on [-64, 64] x [0, 64], h = 0.25."""
    well = standard_well(2.0)
    start = time.perf_counter()
    field, log = minimize(planar_grid, planar_interface(planar_grid), well,
                          SolveOptions(max_iters=5000, tol=1e-9, pinned=("left", "right")))
    log.elapsed = time.perf_counter() - start
    return planar_grid, well, field, log


@pytest.fixture(scope="session")
def small_planar_run():
    grid = HalfSpaceGrid(2, 0.25, (129, 65), (-16.0, 0.0))
    well = standard_well(2.0)
    field, log = minimize(grid, planar_interface(grid), well,
                          SolveOptions(max_iters=5000, tol=1e-9, pinned=("left", "right")))
    return grid, well, field, log


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
