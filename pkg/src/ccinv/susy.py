"""Supersymmetric partner potentials.

The production path mirrors the inversion experiment: drop the bound
part of the input kernel and reconstruct.  The result shares the
reflection matrix of the original potential but sustains no bound state;
it is no longer confined to x >= 0, so the reconstruction runs on an
extended box whose left edge must sit deep in the e^{2 kappa x} tail.

The factorization path is the algebraic cross-check.  With Phi(x) the
matrix solution of the Schroedinger equation at factorization energy
qbar^2 that decays to the left (Phi -> e^{Kt x}, Kt = diag(kt_j)),

    W = Phi' Phi^{-1}

solves the matrix Riccati equation W' + W^2 = V + E - qbar^2, and the
partner is evaluated without differentiating W:

    V1 = V0 - 2 W' = 2 W^2 - V0 - 2 E + 2 qbar^2.

The left boundary value is W(-inf) = +Kt, i.e. the sign matrix S of the
boundary parameterization diag(kt_j) S comes out +1 in every row for
this all-decaying solution under the Riccati sign above (the opposite
overall sign of W flips every S entry; only W^2 enters the partner).
At qbar^2 equal to the lowest bound energy the partner loses exactly
that state.  Applying the one-step reflection map twice with opposite
(diagonal) boundary values restores R exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSystem, ChannelMomenta
from .errors import NumericalError
from .forward import _cell_spectra, _apply_cell
from .kernel import total_kernel
from .marchenko import reconstruct, ReconstructionResult, _derivative as _dx4
from .profiles import PotentialGrid

__all__ = [
    "Superpotential",
    "superpotential_from_factorization_solution",
    "partner_from_superpotential",
    "partner_via_omission",
    "transform_reflection",
]


@dataclass(eq=False)
class Superpotential:
    """W on the grid of the source potential, with its diagnostics."""

    grid: PotentialGrid              # source potential V0
    W: np.ndarray                    # (npts, N, N) real
    factorization_energy: float      # qbar^2, <= lowest bound energy
    S: np.ndarray                    # diagonal sign matrix at the left edge
    riccati_residual: float
    boundary_defect: float

    @property
    def W_left(self) -> np.ndarray:
        return self.W[0]


def superpotential_from_factorization_solution(
        V: PotentialGrid, sys: ChannelSystem, qbar_sq: float,
        n_sub: int = 4) -> Superpotential:
    """Build W from the left-decaying solution at energy qbar^2.

    The solution is integrated left to right (its growing character makes
    that the stable direction) with the same exact cell propagator as the
    forward solver; a scalar renormalization per step keeps it in range.
    """
    if qbar_sq >= 0.0:
        raise ValueError("factorization energy must be negative")
    kappa_bar = np.sqrt(-qbar_sq)
    kt = np.sqrt(kappa_bar ** 2 + sys.eps)          # per-channel decay rates
    n = sys.n_channels
    x = V.x
    ksq = np.array([complex(qbar_sq)])

    U, d = _cell_spectra(V, sys, n_sub)
    Phi = np.eye(n, dtype=complex)[None]
    dPhi = (np.diag(kt).astype(complex))[None]      # Phi = e^{Kt x}, x = x_lo
    W = np.empty((x.size, n, n))
    W[0] = np.diag(kt)
    for m in range(x.size - 1):
        for s in range(n_sub):
            Phi, dPhi = _apply_cell(U[m * n_sub + s], d[m * n_sub + s],
                                    V.h / n_sub, ksq, Phi, dPhi)
        scale = np.max(np.abs(Phi))
        Phi = Phi / scale
        dPhi = dPhi / scale
        try:
            Wm = np.linalg.solve(Phi[0].T, dPhi[0].T).T
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"factorization solution singular at x={x[m + 1]:g}; "
                "qbar^2 above an eigenvalue of the system") from exc
        if float(np.max(np.abs(Wm.imag))) > 1e-8 * max(np.max(np.abs(Wm.real)), 1.0):
            raise NumericalError("superpotential acquired an imaginary part")
        W[m + 1] = Wm.real

    # Riccati residual via the algebraic identity: W' = V + E - qbar^2 - W^2
    # must equal the 4th-order finite difference of W
    E = np.diag(sys.thresholds)
    rhs = V.values + E[None] - qbar_sq * np.eye(n)[None] \
        - np.einsum("xab,xbc->xac", W, W)
    dW = _dx4(W, V.h)
    res = float(np.max(np.abs(dW[2:-2] - rhs[2:-2])))
    bdef = float(np.max(np.abs(W[0] - np.diag(kt))))
    return Superpotential(grid=V, W=W, factorization_energy=qbar_sq,
                          S=np.eye(n), riccati_residual=res,
                          boundary_defect=bdef)


def partner_from_superpotential(sp: Superpotential,
                                sys: ChannelSystem) -> PotentialGrid:
    """Partner V1 = 2 W^2 - V0 - 2E + 2 qbar^2, no differentiation."""
    V0 = sp.grid
    n = sys.n_channels
    E = np.diag(sys.thresholds)
    W2 = np.einsum("xab,xbc->xac", sp.W, sp.W)
    V1 = 2.0 * W2 - V0.values - 2.0 * E[None] \
        + 2.0 * sp.factorization_energy * np.eye(n)[None]
    V1 = 0.5 * (V1 + V1.transpose(0, 2, 1))
    from .profiles import grid_from_values
    return grid_from_values(V0.x, V1)


def partner_via_omission(table, working_grid: np.ndarray) -> ReconstructionResult:
    """Reconstruct with the bound kernel dropped: the SUSY partner.

    working_grid must extend well left of the origin (the partner's tail
    decays like e^{2 kappa x}); the Marchenko rows integrate from its
    left edge.
    """
    ker = total_kernel(table, [], working_grid)
    return reconstruct(ker, extended=True)


def transform_reflection(R0: np.ndarray, W_left: np.ndarray,
                         km: ChannelMomenta) -> np.ndarray:
    """One SUSY step on the reflection matrix: (W+iK) R0 (W-iK)^{-1}."""
    K = np.diag(km.kj)
    plus = W_left + 1j * K
    minus = W_left - 1j * K
    try:
        return plus @ R0 @ np.linalg.inv(minus)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("W - iK singular in reflection transform") from exc
