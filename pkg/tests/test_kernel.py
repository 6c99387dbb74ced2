"""Input-kernel assembly: threshold windows, bound part, compensation."""

import numpy as np
import pytest

import cases
from ccinv.channels import ChannelSystem, channel_momenta
from ccinv.errors import ThresholdGridError
from ccinv.forward import BoundState, ReflectionTable, build_k_grid
from ccinv.kernel import (ScatteringIntegral, bound_kernel, scattering_kernel,
                          total_kernel)


def _flat_table(sys, k_grid, entry=None):
    """Table with R identically zero except an optional constant entry."""
    n = sys.n_channels
    R = np.zeros((k_grid.size, n, n), dtype=complex)
    if entry is not None:
        i, j, val = entry
        R[:, i, j] = val
    T = np.zeros_like(R)
    return ReflectionTable(sys=sys, k_grid=k_grid, R=R, T=T,
                           k_max=float(k_grid[-1]))


def test_threshold_window_quadrature_oracle():
    # R_22 == 1: the integral is analytic, (1/pi) Re Int_0^kmax k/k_2 dk
    # = sqrt(kmax^2 - eps) / pi; the below-threshold stretch is purely
    # imaginary and must drop out exactly
    s = ChannelSystem(2, (0.0, 0.025))
    kg = build_k_grid(s, 12.0, 1200)
    ker = ScatteringIntegral(_flat_table(s, kg, (1, 1, 1.0)))
    rho = ker.evaluate(0.0, 0.0)
    want = np.sqrt(12.0 ** 2 - 0.025) / np.pi
    assert abs(rho[1, 1].real - want) < 1e-4
    assert abs(rho[1, 1].imag) < 1e-9
    assert np.max(np.abs(rho[[0, 0, 1], [0, 1, 0]])) < 1e-12


def test_cache_matches_pointwise_evaluate(case3_run):
    _, _, table = case3_run
    ker = ScatteringIntegral(table)
    xs = np.array([-1.5, -0.4, 0.3])
    ys = np.array([-2.0, -0.9])
    grid = ker.cache(xs, ys)
    for a, xv in enumerate(xs):
        for b, yv in enumerate(ys):
            pt = ker.evaluate(float(xv), float(yv))
            assert np.max(np.abs(grid[a, b] - pt.real)) < 1e-12


def test_one_shot_helper(case2_run):
    _, _, table = case2_run
    a = scattering_kernel(table, -0.7, -1.3)
    b = ScatteringIntegral(table).evaluate(-0.7, -1.3)
    assert np.array_equal(a, b)


def test_coarse_grid_near_threshold_rejected():
    # uniform dk = 0.1 leaves one node below sqrt(0.025): refuse loudly
    s = ChannelSystem(2, (0.0, 0.025))
    kg = np.round(np.arange(0.1, 12.001, 0.1), 10)
    with pytest.raises(ThresholdGridError) as exc:
        ScatteringIntegral(_flat_table(s, kg))
    assert exc.value.channel == 2


def test_bound_kernel_single_channel_sign():
    s = ChannelSystem(1, (0.0,))
    st = BoundState(kappa=0.3, Q=channel_momenta(s, 0.3j),
                    M=np.array([[-0.5]]))
    val = bound_kernel([st], -1.2, -0.8)
    want = 0.5 * np.exp(0.3 * (-1.2 - 0.8))
    assert abs(val[0, 0] - want) < 1e-14


def test_bound_kernel_empty_needs_channel_count():
    with pytest.raises(ValueError):
        bound_kernel([], 0.0, 0.0)
    assert np.array_equal(bound_kernel([], 0.0, 0.0, n_channels=2),
                          np.zeros((2, 2)))


def test_total_kernel_splits_and_symmetry(case3_inversion):
    _, ker, _ = case3_inversion
    assert np.max(np.abs(ker.cache
                         - ker.scattering_cache - ker.bound_cache)) < 1e-14
    assert ker.symmetry_residual < 1e-6
    assert ker.compensation_residual < 1e-2


def test_symmetry_residual_case2(case2_inversion):
    _, ker, _ = case2_inversion
    assert ker.symmetry_residual < 1e-6


def test_compensation_flags_missing_bound_part(case3_run):
    s, V, table = case3_run
    grid = np.round(np.arange(-4.0, 5.4 + 0.025, 0.05), 10)
    ker = total_kernel(table, [], grid)
    assert ker.compensation_residual > 0.1


def test_kernel_converges_in_grid_density(case3_run, case2_run):
    xs = np.round(np.arange(-4.0, 5.4 + 0.025, 0.2), 10)
    _, _, table = case3_run
    _, _, table2 = cases.build_table(cases.CASE3, count=2400)
    d = np.abs(ScatteringIntegral(table).cache(xs)
               - ScatteringIntegral(table2).cache(xs))
    assert float(np.max(d)) < 1e-4
    # the threshold-window extrapolation converges more slowly, so the
    # thresholded system sits a bit above the smooth-case figure
    _, _, u1 = case2_run
    _, _, u2 = cases.build_table(cases.CASE2, count=2400)
    d2 = np.abs(ScatteringIntegral(u1).cache(xs)
                - ScatteringIntegral(u2).cache(xs))
    assert float(np.max(d2)) < 5e-4
