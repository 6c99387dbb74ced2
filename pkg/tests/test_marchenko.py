"""Marchenko row solver and potential reconstruction."""

import numpy as np
import pytest

from ccinv.channels import ChannelSystem
from ccinv.errors import InconsistentDataError, NumericalError
from ccinv.kernel import InputKernel
from ccinv.marchenko import _derivative, reconstruct, solve_row


def make_kernel(fill, x_lo=-1.0, x_hi=1.0, h=0.05, n=1):
    """InputKernel straight from a cache-filling function (no scattering)."""
    xs = np.round(np.arange(x_lo, x_hi + h / 2, h), 10)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    cache = np.zeros((xs.size, xs.size, n, n))
    fill(cache, X, Y)
    return InputKernel(sys=ChannelSystem(n, (0.0,) * n), k_max=12.0,
                       x_grid=xs, cache=cache, scattering_cache=cache,
                       bound_cache=np.zeros_like(cache), states=[],
                       scattering=None, symmetry_residual=0.0)


def born_kernel(amp=1e-4):
    def fill(cache, X, Y):
        cache[:, :, 0, 0] = amp * np.exp(-(X + Y) ** 2)
    return make_kernel(fill)


def test_born_limit():
    # first iteration of the series: B = -rho + O(rho^2), so at
    # amplitude 1e-4 the defect must sit at the 1e-8 scale
    ker = born_kernel()
    row = solve_row(ker, 1.0, extended=True)
    rho = ker.cache[-1, :, :, :]
    assert float(np.max(np.abs(row.B + rho))) < 1e-7
    assert row.condition < 10.0


def test_degenerate_row_rejected():
    # constant kernel -1/span makes (I + G) exactly rank deficient
    def fill(cache, X, Y):
        cache[:, :, 0, 0] = -0.5
    ker = make_kernel(fill)
    with pytest.raises(NumericalError):
        solve_row(ker, 1.0, extended=True)


def test_point_row_shortcut():
    ker = born_kernel()
    row = solve_row(ker, 0.0)
    assert row.y_grid.size == 1
    assert row.B[0, 0, 0] == pytest.approx(-1e-4, abs=1e-18)
    assert row.condition == 1.0


def test_row_argument_validation():
    ker = born_kernel()
    with pytest.raises(ValueError):
        solve_row(ker, 0.5, h=0.01)
    with pytest.raises(ValueError):
        solve_row(ker, 0.513)
    lop = make_kernel(lambda c, X, Y: None, x_lo=-0.5, x_hi=1.0)
    with pytest.raises(ValueError):
        solve_row(lop, 0.8)


def test_derivative_stencil_order():
    h = 0.05
    xs = np.round(np.arange(0.0, 2 * np.pi, h), 10)
    err = np.max(np.abs(_derivative(np.sin(xs), h) - np.cos(xs)))
    assert err < 2e-5
    xs2 = np.round(np.arange(0.0, 2 * np.pi, h / 2), 10)
    err2 = np.max(np.abs(_derivative(np.sin(xs2), h / 2) - np.cos(xs2)))
    assert err / err2 > 8.0


def test_reconstruction_metrics(case3_inversion):
    _, ker, rec = case3_inversion
    assert rec.trace_residual < 2e-2
    assert rec.asymmetry < 0.05
    assert 1.0 <= rec.max_condition < 1e12
    assert rec.x[0] == ker.x_grid[0] or rec.x[0] >= ker.x_grid[0]
    assert rec.potential.values.shape == (rec.x.size, 2, 2)


def test_matrix_asymmetric_kernel_rejected():
    # data in the 12 slot only cannot come from a symmetric potential
    def fill(cache, X, Y):
        cache[:, :, 0, 1] = 0.05 * np.exp(-(X + Y - 1.0) ** 2)
    ker = make_kernel(fill, x_lo=-2.0, x_hi=2.0, n=2)
    with pytest.raises(InconsistentDataError):
        reconstruct(ker)


def test_reconstruction_window_needs_nodes():
    with pytest.raises(ValueError):
        reconstruct(born_kernel(), x_lo=0.0, x_hi=0.15)
