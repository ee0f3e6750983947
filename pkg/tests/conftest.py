from __future__ import annotations

import numpy as np
import pytest

from bgkmix.grid import build_grid
from bgkmix.mixture import MixtureParameters, maxwellian_eval
from bgkmix.moments import DistributionField


@pytest.fixture(scope="session")
def grid1():
    return build_grid(velocity_dim=1, v_max=8.0, n_nodes_per_axis=128)


@pytest.fixture(scope="session")
def grid3():
    return build_grid(velocity_dim=3, v_max=7.0, n_nodes_per_axis=32)


@pytest.fixture
def symmetric_params():
    return MixtureParameters(m1=1.0, m2=1.0, epsilon=1.0, alpha=0.5, delta=0.5, gamma=0.0)


def maxwellian_field(grid, n=1.0, u=0.0, T=1.0, m=1.0, conservative=False):
    vals = maxwellian_eval(n, np.broadcast_to(np.atleast_1d(u), (grid.velocity_dim,)), T, m, grid,
                           conservative)
    return DistributionField(np.tile(vals, (grid.n_cells, 1)), m, grid)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
