"""Supersymmetric partner construction, both production and algebraic paths."""

import numpy as np
import pytest

import cases
from conftest import compare_window
from ccinv.channels import ChannelSystem, channel_momenta
from ccinv.forward import compute_bound_states
from ccinv.profiles import GaussianProfile, ZeroProfile, assemble_potential
from ccinv.susy import (partner_from_superpotential, partner_via_omission,
                        superpotential_from_factorization_solution,
                        transform_reflection)


def test_zero_potential_gives_constant_W():
    s = ChannelSystem(1, (0.0,))
    V = assemble_potential(s, {(0, 0): ZeroProfile()}, (-1.0, 1.0, 0.05))
    sp = superpotential_from_factorization_solution(V, s, -0.09)
    assert np.max(np.abs(sp.W - 0.3)) < 1e-10
    assert sp.riccati_residual < 1e-10
    assert sp.boundary_defect == 0.0
    assert np.array_equal(sp.S, np.eye(1))


def test_factorization_energy_must_be_negative():
    s = ChannelSystem(1, (0.0,))
    V = assemble_potential(s, {(0, 0): ZeroProfile()}, (-1.0, 1.0, 0.05))
    for bad in (0.0, 0.1):
        with pytest.raises(ValueError):
            superpotential_from_factorization_solution(V, s, bad)


def test_case3_superpotential(case3_run, case3_states):
    s, V, _ = case3_run
    e_b = case3_states[0].energy
    sp = superpotential_from_factorization_solution(V, s, e_b)
    kt = np.sqrt(-e_b + np.array([0.0, 0.0]))
    assert np.max(np.abs(sp.W_left - np.diag(kt))) < 1e-14
    assert sp.boundary_defect == 0.0
    assert np.array_equal(sp.S, np.eye(2))
    # the seasaw block has slope kinks at grid nodes; the 4th-order
    # difference of W picks up an O(h) floor there, so the residual is
    # h-limited, not solver-limited (it halves with h below)
    assert sp.riccati_residual < 5e-3
    _, V2 = cases.build_potential(cases.CASE3, h=0.025)
    sp2 = superpotential_from_factorization_solution(V2, s, e_b)
    assert sp2.riccati_residual < 1.4e-3
    assert sp2.riccati_residual < 0.7 * sp.riccati_residual


def test_smooth_system_meets_riccati_tolerance():
    s = ChannelSystem(2, (0.0, 0.0))
    specs = {(0, 0): GaussianProfile(0.15, 1.5, 2.2),
             (1, 1): GaussianProfile(-0.1, 2.0, 2.3),
             (0, 1): GaussianProfile(0.1, 1.8, 2.0)}
    V = assemble_potential(s, specs, (-6.0, 6.0, 0.05))
    sp = superpotential_from_factorization_solution(V, s, -0.01552842)
    assert sp.riccati_residual < 1e-4


def test_factorization_partner_removes_the_state(case3_run, case3_states):
    s, V, _ = case3_run
    sp = superpotential_from_factorization_solution(
        V, s, case3_states[0].energy)
    V1 = partner_from_superpotential(sp, s)
    assert np.max(np.abs(V1.values - V1.values.transpose(0, 2, 1))) < 1e-12
    assert compute_bound_states(V1, s, kappa_max=0.9) == []
    dev = np.max(np.abs(V1.values - V.values))
    assert dev > 0.25 * np.max(np.abs(V.values))


def test_two_step_transform_restores_reflection():
    s = ChannelSystem(2, (0.0, 0.025))
    km = channel_momenta(s, 0.7)
    R0 = np.array([[0.30 - 0.10j, 0.05 + 0.20j],
                   [0.05 + 0.20j, -0.40 + 0.02j]])
    # physical boundary values: W = diag(kt_j(kappa_bar)) makes
    # (W - iK)(W + iK) proportional to the identity
    W = np.diag(np.sqrt(0.3 ** 2 + s.eps))
    R2 = transform_reflection(transform_reflection(R0, W, km), -W, km)
    assert np.max(np.abs(R2 - R0)) < 1e-12
    # an arbitrary diagonal W does not close the loop
    Wb = np.diag([0.3, 0.45])
    R2b = transform_reflection(transform_reflection(R0, Wb, km), -Wb, km)
    assert np.max(np.abs(R2b - R0)) > 1e-3


def test_transform_single_channel_forms():
    s = ChannelSystem(1, (0.0,))
    km = channel_momenta(s, 1.3)
    R0 = np.array([[0.4 - 0.2j]])
    # W = 0 flips the sign outright
    assert np.allclose(transform_reflection(R0, np.zeros((1, 1)), km), -R0)
    kb = 0.25
    R1 = transform_reflection(R0, np.array([[kb]]), km)
    want = R0[0, 0] * (kb + 1.3j) / (kb - 1.3j)
    assert abs(R1[0, 0] - want) < 1e-14
    assert abs(abs(R1[0, 0]) - abs(R0[0, 0])) < 1e-14


def test_transform_factor_is_unimodular():
    s = ChannelSystem(2, (0.0, 0.025))
    km = channel_momenta(s, 2.0)
    W = np.diag(np.sqrt(0.12 ** 2 + s.eps))
    plus = np.linalg.det(W + 1j * np.diag(km.kj))
    minus = np.linalg.det(W - 1j * np.diag(km.kj))
    assert abs(abs(plus / minus) - 1.0) < 1e-12


def test_omission_reduces_to_inversion_without_states(case2_run):
    s, V, table = case2_run
    rec = partner_via_omission(table, cases.working_grid(4.5))
    err = compare_window(V, rec, 0.0, 4.5)
    assert float(np.max(err)) < 0.03
