"""Channel kinematics: branch choice, weights, validation."""

import numpy as np
import pytest

from ccinv.channels import (ChannelSystem, channel_momenta, momenta_array,
                            reflection_symmetry_residual)

S2 = ChannelSystem(2, (0.0, 0.025))


def test_open_channel_momenta():
    km = channel_momenta(S2, 2.0)
    assert np.allclose(km.kj, [2.0, 1.9937402], atol=1e-7)
    assert np.allclose(km.derivative_weights, [1.0, 1.00313973], atol=1e-7)


def test_closed_channel_momenta():
    km = channel_momenta(S2, 0.1)
    assert km.kj[0] == 0.1
    assert abs(km.kj[1] - 0.12247449j) < 1e-8
    # weight k/k_j turns purely negative imaginary below threshold
    assert abs(km.derivative_weights[1] - (-0.81649658j)) < 1e-8


def test_imaginary_axis_momenta():
    km = channel_momenta(S2, 0.08j)
    assert abs(km.kj[0] - 0.08j) < 1e-15
    assert abs(km.kj[1] - 0.17720045j) < 1e-8


@pytest.mark.parametrize("k", [0.05, 0.3, 1.7, 6.0, 11.9])
def test_conjugation_identity(k):
    # k_j(-k) = -conj(k_j(k)) on the physical sheet
    plus = channel_momenta(S2, k).kj
    minus = channel_momenta(S2, -k).kj
    assert np.max(np.abs(minus + np.conj(plus))) < 1e-14


def test_zero_momentum_weights():
    w = channel_momenta(S2, 0.0).derivative_weights
    assert np.allclose(w, [1.0, 0.0])
    w = channel_momenta(ChannelSystem(2, (0.0, 0.0)), 0.0).derivative_weights
    assert np.allclose(w, [1.0, 1.0])


def test_exact_threshold_weight_is_infinite():
    km = channel_momenta(S2, np.sqrt(0.025))
    assert km.kj[1] == 0.0
    assert np.isinf(km.derivative_weights[1])


@pytest.mark.parametrize("k", [1 + 1j, -0.3j, 2j - 1e-3])
def test_off_axis_momentum_rejected(k):
    with pytest.raises(ValueError):
        channel_momenta(S2, k)


def test_momenta_array_matches_scalar():
    ks = np.array([0.05, 0.2, 1.0, 4.0])
    batch = momenta_array(S2, ks)
    for row, k in zip(batch, ks):
        assert np.max(np.abs(row - channel_momenta(S2, k).kj)) < 1e-15


@pytest.mark.parametrize("thresholds", [(0.1, 0.2), (0.0, 0.3, 0.2), (0.0,)])
def test_bad_thresholds_rejected(thresholds):
    with pytest.raises(ValueError):
        ChannelSystem(2, thresholds)


def test_symmetry_residual():
    km = channel_momenta(ChannelSystem(2, (0.0, 0.0)), 0.8)
    R = np.array([[0.1, 0.2 + 0.1j], [0.2 + 0.1j, -0.3]])
    assert reflection_symmetry_residual(R, km) < 1e-15
    R[1, 0] += 0.05
    assert abs(reflection_symmetry_residual(R, km) - 0.05 * 0.8) < 1e-12
    with pytest.raises(ValueError):
        reflection_symmetry_residual(np.eye(3), km)
