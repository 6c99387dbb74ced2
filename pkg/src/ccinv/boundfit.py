"""Bound-state parameters from reflection data alone.

Left of the potential support the two parts of the input kernel cancel,
so the reflection integral alone satisfies

    rho_s_ij(x,y) = sum_alpha e^{kt_i x} M_ij e^{kt_j y} kappa/kt_j,
    kt_j = sqrt(kappa_alpha^2 + eps_j),        y < x < 0,

which turns bound-state recovery into exponential-sum fitting.  On the
first channel (kt_1 = kappa) the diagonal depends on s = x + y only and
a variable-projection fit of sum c_alpha e^{kappa_alpha s} delivers the
decay constants; exponents are then known for every other element and
one linear least-squares per matrix element fills in M.

The number of states is a hypothesis: the relative fit residual gates
acceptance, so a wrong N_b surfaces as a rejection instead of phantom
states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .channels import ChannelSystem, channel_momenta
from .errors import FitRejectedError, NumericalError
from .forward import BoundState
from .kernel import ScatteringIntegral

__all__ = ["FitRegion", "fit_diagonal", "fit_offdiagonal", "fit_bound_states"]

_COLLISION_TOL = 1e-4


@dataclass(frozen=True)
class FitRegion:
    """Sampling region x+y in [s_lo, s_hi], strictly left of the support."""

    s_lo: float
    s_hi: float = -0.2
    n_samples: int = 80
    separation: float = 0.1      # x - y offset keeping y < x

    def __post_init__(self):
        if not (self.s_lo < self.s_hi < 0.0):
            raise ValueError("need s_lo < s_hi < 0")
        if self.n_samples < 8:
            raise ValueError("need at least 8 samples")

    def pairs(self):
        """(x, y) samples with x+y sweeping the region."""
        s = np.linspace(self.s_lo, self.s_hi, self.n_samples)
        x = 0.5 * (s + self.separation)
        y = 0.5 * (s - self.separation)
        if x[-1] >= 0.0:
            raise ValueError("region touches x >= 0; shrink s_hi")
        return x, y


def _samples(kernel_scat: ScatteringIntegral, region: FitRegion):
    x, y = region.pairs()
    vals = kernel_scat.cache(x, y)          # (ns, ns, N, N); need the diagonal
    idx = np.arange(x.size)
    return x, y, vals[idx, idx]             # (ns, N, N)


def _amplitudes(s, v, kappas):
    """Linear LS amplitudes for sum c_a exp(kappa_a s); returns (c, resid)."""
    design = np.exp(np.outer(s, kappas))
    c, *_ = np.linalg.lstsq(design, v, rcond=None)
    resid = design @ c - v
    return c, resid


def _init_exponents(s, v, n_b):
    """Greedy slope-based starting exponents, smallest kappa first."""
    kappas = []
    resid = v.copy()
    for _ in range(n_b):
        mag = np.abs(resid)
        usable = mag > 1e-13
        if usable.sum() < 4:
            kappas.append(0.05 * (len(kappas) + 1))
            continue
        # the leftmost third of the region isolates the slowest exponent
        third = max(usable.sum() // 3, 4)
        pick = np.nonzero(usable)[0][:third]
        slope = np.polyfit(s[pick], np.log(mag[pick]), 1)[0]
        kappas.append(min(max(slope, 1e-3), 5.0))
        c, r = _amplitudes(s, v, np.array(kappas))
        resid = r
    return np.array(sorted(kappas))


def fit_diagonal(kernel_scat: ScatteringIntegral, sys: ChannelSystem,
                 n_b: int, region: FitRegion,
                 residual_gate: float = 1e-3):
    """Fit channel-1 exponents and all diagonal normalization entries.

    Returns (kappas, diag_M, residual) with kappas ascending, diag_M of
    shape (n_b, N) and residual the relative channel-1 misfit.
    """
    if n_b == 0:
        return np.empty(0), np.empty((0, sys.n_channels)), 0.0
    x, y, vals = _samples(kernel_scat, region)
    s = x + y
    v1 = vals[:, 0, 0]
    scale = float(np.max(np.abs(v1)))
    if scale == 0.0:
        raise FitRejectedError("channel-1 kernel vanishes on the fit region; "
                               "no bound-state signal", residual=1.0)

    k0 = _init_exponents(s, v1, n_b)

    def objective(logk):
        _, r = _amplitudes(s, v1, np.exp(logk))
        return r / scale

    sol = least_squares(objective, np.log(k0), method="lm", xtol=1e-14,
                        ftol=1e-14, max_nfev=400)
    kappas = np.sort(np.exp(sol.x))
    residual = float(np.linalg.norm(sol.fun) / math.sqrt(s.size))
    if residual > residual_gate:
        raise FitRejectedError(
            f"exponential fit residual {residual:.3e} exceeds "
            f"{residual_gate:g}; N_b={n_b} hypothesis rejected",
            residual=residual)
    if n_b > 1 and np.min(np.diff(kappas)) < _COLLISION_TOL:
        raise NumericalError("two fitted decay constants within "
                             f"{_COLLISION_TOL}; states unresolved")

    # per-channel diagonal amplitudes with exponents pinned to kt_j
    diag_M = np.empty((n_b, sys.n_channels))
    for j in range(sys.n_channels):
        kt = np.sqrt(kappas ** 2 + sys.eps[j])
        vj = vals[:, j, j]
        # samples depend on (x, y) separately once eps_j > 0
        design = np.exp(np.outer(x, kt) + np.outer(y, kt))
        c, *_ = np.linalg.lstsq(design, vj, rcond=None)
        diag_M[:, j] = c * kt / kappas
    return kappas, diag_M, residual


def fit_offdiagonal(kernel_scat: ScatteringIntegral, sys: ChannelSystem,
                    kappas: np.ndarray, region: FitRegion) -> list:
    """Full M matrices by linear LS with the exponents fixed.

    Every element (including the diagonal, refit for consistency) obeys
    rho_s_ij = sum_a e^{kt_ai x} M_a_ij e^{kt_aj y} kappa_a/kt_aj; the
    design is linear in M.
    """
    kappas = np.asarray(kappas, dtype=float)
    n_b = kappas.size
    n = sys.n_channels
    if n_b == 0:
        return []
    x, y, vals = _samples(kernel_scat, region)
    kt = np.sqrt(kappas[:, None] ** 2 + sys.eps[None, :])    # (n_b, N)
    Ms = np.zeros((n_b, n, n))
    for i in range(n):
        for j in range(n):
            design = np.exp(np.outer(x, kt[:, i]) + np.outer(y, kt[:, j]))
            design *= (kappas / kt[:, j])[None, :]
            sol, res, rank, _ = np.linalg.lstsq(design, vals[:, i, j],
                                                rcond=None)
            if rank < n_b:
                raise NumericalError(
                    f"rank-deficient design for element ({i + 1},{j + 1}); "
                    "fit region too small or exponents too close")
            Ms[:, i, j] = sol
    return [Ms[a] for a in range(n_b)]


def fit_bound_states(kernel_scat: ScatteringIntegral, sys: ChannelSystem,
                     n_b: int, region: FitRegion,
                     residual_gate: float = 1e-3,
                     symmetry_tol: float = 0.02) -> list:
    """End-to-end recovery: exponents, full M, symmetry check."""
    kappas, _, residual = fit_diagonal(kernel_scat, sys, n_b, region,
                                       residual_gate)
    Ms = fit_offdiagonal(kernel_scat, sys, kappas, region)
    states = []
    for kappa, M in zip(kappas, Ms):
        Q = channel_momenta(sys, 1j * kappa)
        q = Q.kj
        lhs = M.T * q[None, :]
        rhs = q[:, None] * M
        scale = float(np.max(np.abs(M * np.abs(q)[None, :]))) or 1.0
        defect = float(np.max(np.abs(lhs - rhs))) / scale
        if defect > symmetry_tol:
            raise NumericalError(
                f"fitted residue symmetry violated by {defect:.2%} at "
                f"kappa={kappa:.6g}; data inconsistent with a bound state")
        states.append(BoundState(kappa=float(kappa), Q=Q, M=M))
    return states
