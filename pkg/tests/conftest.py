"""Session fixtures: forward tables, bound states, reconstructions.

Everything heavy is session-scoped so the acceptance gate and the module
tests share one forward solve per case.
"""

import numpy as np
import pytest

import cases
from ccinv.forward import compute_bound_states
from ccinv.kernel import total_kernel
from ccinv.marchenko import reconstruct


@pytest.fixture(scope="session")
def case1_run():
    return cases.build_table(cases.CASE1)


@pytest.fixture(scope="session")
def case2_run():
    return cases.build_table(cases.CASE2)


@pytest.fixture(scope="session")
def case3_run():
    return cases.build_table(cases.CASE3)


@pytest.fixture(scope="session")
def case4_run():
    return cases.build_table(cases.CASE4)


@pytest.fixture(scope="session")
def case3_states(case3_run):
    s, V, _ = case3_run
    return compute_bound_states(V, s, kappa_max=cases.CASE3["kappa_max"])


@pytest.fixture(scope="session")
def case4_states(case4_run):
    s, V, _ = case4_run
    return compute_bound_states(V, s, kappa_max=cases.CASE4["kappa_max"])


@pytest.fixture(scope="session")
def case2_inversion(case2_run):
    _, V, table = case2_run
    grid = cases.working_grid(cases.CASE2["box"])
    ker = total_kernel(table, [], grid)
    return V, ker, reconstruct(ker)


@pytest.fixture(scope="session")
def case3_inversion(case3_run, case3_states):
    _, V, table = case3_run
    grid = cases.working_grid(cases.CASE3["box"])
    ker = total_kernel(table, case3_states, grid)
    return V, ker, reconstruct(ker)


@pytest.fixture(scope="session")
def case4_inversion(case4_run, case4_states):
    _, V, table = case4_run
    grid = cases.working_grid(cases.CASE4["box"])
    ker = total_kernel(table, case4_states, grid)
    return V, ker, reconstruct(ker)


def compare_window(V, rec, x_lo=0.0, x_hi=None):
    """Per-element sup errors over [x_lo, x_hi], relative to max|V| there."""
    if x_hi is None:
        x_hi = rec.x[-1]
    xs = rec.x
    sel = (xs >= x_lo - 1e-9) & (xs <= x_hi + 1e-9)
    idx = np.array([V.index_of(float(xv)) for xv in xs[sel]])
    orig = V.values[idx]
    diff = np.abs(rec.potential.values[sel] - orig)
    scale = float(np.max(np.abs(orig))) or 1.0
    n = V.n_channels
    return diff.reshape(diff.shape[0], -1).max(axis=0).reshape(n, n) / scale
