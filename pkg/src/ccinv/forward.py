"""Direct solver for the coupled-channel Schroedinger problem on the line.

The stationary equation integrated here is

    Psi'' = (V(x) + E - k^2) Psi,      E = diag(eps_1, ..., eps_N),

for a real symmetric matrix potential V of finite support.  The Jost
solution F_+ carries the boundary condition exp(+iKx) beyond the right
edge of the support; integrating it down to the left edge and splitting
into free waves there,

    A = (Psi + (iK)^{-1} Psi') / 2,    B = (Psi - (iK)^{-1} Psi') / 2,

gives the transmission and reflection matrices for incidence from the
left, T = A^{-1} and R = B A^{-1}.

Integration scheme.  Each grid cell is propagated with the exact matrix
solution of the piecewise-constant problem: the cell Hamiltonian
H = V_mid + E (V_mid the midpoint of the linear interpolant) is
diagonalized once per cell -- its eigenvectors do not depend on k, only
the eigenvalues are shifted by -k^2 -- and the cosh/sinh transfer is
applied in that eigenbasis for the whole momentum batch at once.  The
scheme is exact for square profiles, carries no phase error at large k,
and preserves flux, Wronskians and the R^T K = K R symmetry to machine
precision; the only discretization error left is the O(h^2) variation of
V within a cell, which the optional cell subdivision (n_sub) reduces.

Bound states are roots of det W[F_+(i kappa), F_-(i kappa)] on the
positive imaginary momentum axis; the determinant is real there and is
Richardson-extrapolated across two subdivision levels before the root is
bisected.  True bound states require kappa^2 below the first open
threshold.

Residue convention.  Near a bound-state pole q = i*kappa the reflection
matrix behaves as R_L(k) ~ M / (k - q) with a purely imaginary residue
(the single-channel limit gives i c^2 with c the usual norming constant).
residue_matrix returns the real normalization matrix M := i * residue,
the quantity that enters the bound-state part of the inversion kernel and
the one quoted in bound-state tables; its diagonal is negative for an
attractive-type state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelSystem, ChannelMomenta, channel_momenta, momenta_array, \
    reflection_symmetry_residual
from .errors import BoundStateScanError, IntegrationOverflowError, NumericalError
from .profiles import PotentialGrid

__all__ = [
    "ReflectionTable",
    "BoundState",
    "build_k_grid",
    "integrate_jost_plus",
    "reflection_transmission",
    "reflection_table",
    "wronskian",
    "find_bound_states",
    "residue_matrix",
    "compute_bound_states",
]

_OVERFLOW_GUARD = 1e140
_SMALL_ARG = 1e-8


# ---------------------------------------------------------------------------
# propagation engine

def _cell_spectra(V: PotentialGrid, sys: ChannelSystem, n_sub: int = 1):
    """Eigendecompose H = V_cell + diag(eps) for every (sub)cell.

    Returns (U, d): U[(cell, sub)] orthogonal, d the eigenvalues, ordered
    cell-major from the left edge of the grid.
    """
    vals = V.values
    n = sys.n_channels
    if n_sub == 1:
        mid = 0.5 * (vals[:-1] + vals[1:])
    else:
        f = (np.arange(n_sub) + 0.5) / n_sub
        mid = (vals[:-1, None] + f[None, :, None, None] * (vals[1:, None] - vals[:-1, None]))
        mid = mid.reshape(-1, n, n)
    H = mid + np.diag(sys.thresholds)[None]
    d, U = np.linalg.eigh(H)
    return U, d


def _apply_cell(U, d, dx, ksq, Psi, dPsi):
    """Advance (Psi, Psi') across one constant cell for all k at once."""
    lam = d[None, :] - ksq[:, None]                  # (nk, N)
    mu = np.sqrt(lam.astype(complex))
    arg = mu * dx
    ch = np.cosh(arg)
    small = np.abs(arg) < _SMALL_ARG
    mu_safe = np.where(small, 1.0, mu)
    s_over_mu = np.where(small, dx * (1.0 + arg * arg / 6.0), np.sinh(arg) / mu_safe)
    mu_sh = lam * s_over_mu                          # mu * sinh = lam * (sinh/mu)

    y = np.einsum("ba,kbn->kan", U, Psi)
    dy = np.einsum("ba,kbn->kan", U, dPsi)
    y2 = ch[:, :, None] * y + s_over_mu[:, :, None] * dy
    dy2 = mu_sh[:, :, None] * y + ch[:, :, None] * dy
    Psi = np.einsum("ab,kbn->kan", U, y2)
    dPsi = np.einsum("ab,kbn->kan", U, dy2)
    return Psi, dPsi


def _propagate(U, d, cell_indices, dx, ksq, Psi, dPsi):
    """Run the transfer over the given (sub)cell index sequence."""
    for m in cell_indices:
        Psi, dPsi = _apply_cell(U[m], d[m], dx, ksq, Psi, dPsi)
        peak = np.max(np.abs(Psi))
        if not np.isfinite(peak) or peak > _OVERFLOW_GUARD:
            flat = np.argmax(np.abs(Psi))
            chan = (flat // Psi.shape[2]) % Psi.shape[1]
            raise IntegrationOverflowError(
                f"integration overflow (|Psi| ~ {peak:.3g}) in channel {chan + 1}; "
                "deep closed channels over a wide grid need a narrower window",
                channel=int(chan) + 1, growth=float(peak))
    return Psi, dPsi


def _decompose(V: PotentialGrid, sys: ChannelSystem, k_values: np.ndarray,
               n_sub: int = 1):
    """Free-wave coefficients (A, B) of F_+ at the left support edge.

    Integrates the Jost solution from the right support edge down to the
    left one and matches onto exp(+-iKx) there.  Returns (A, B, kj, x_s)
    with A, B of shape (nk, N, N).
    """
    x = V.x
    if V.max_abs() > 0:
        # one cell beyond the detected support on each side: the adjacent
        # cell averages are not zero when the edge node is
        i_start = max(V.index_of(V.support_start) - 1, 0)
        i_end = min(V.index_of(V.support_end) + 1, x.size - 1)
    else:
        i_start, i_end = 0, x.size - 1
    k = np.asarray(k_values, dtype=complex).reshape(-1)
    kj = momenta_array(sys, k)
    if np.any(np.abs(kj) < 1e-13):
        raise ValueError("momentum sits exactly on a threshold (k_j = 0)")

    n = sys.n_channels
    x_b = x[i_end]
    phase = np.exp(1j * kj * x_b)                    # (nk, N)
    Psi = np.zeros((k.size, n, n), dtype=complex)
    dPsi = np.zeros_like(Psi)
    rows = np.arange(n)
    Psi[:, rows, rows] = phase
    dPsi[:, rows, rows] = 1j * kj * phase

    U, d = _cell_spectra(V, sys, n_sub)
    # cells i_start .. i_end-1, traversed right to left, sub-cells likewise
    cells = [c * n_sub + s
             for c in range(i_end - 1, i_start - 1, -1)
             for s in range(n_sub - 1, -1, -1)]
    Psi, dPsi = _propagate(U, d, cells, -V.h / n_sub, k ** 2, Psi, dPsi)

    x_s = x[i_start]
    ikj = 1j * kj
    half = dPsi / ikj[:, :, None]
    A = 0.5 * np.exp(-ikj * x_s)[:, :, None] * (Psi + half)
    B = 0.5 * np.exp(+ikj * x_s)[:, :, None] * (Psi - half)
    return A, B, kj, float(x_s)


# ---------------------------------------------------------------------------
# public forward operations

def integrate_jost_plus(V: PotentialGrid, sys: ChannelSystem, k: complex,
                        n_sub: int = 1):
    """Jost solution F_+ and its derivative at x = 0.

    F_+ carries the boundary condition exp(+iKx) beyond the right support
    edge.  The grid must contain the node x = 0.
    """
    km = channel_momenta(sys, k)
    kj = km.kj[None, :]
    i0 = V.index_of(0.0)
    if V.max_abs() > 0:
        i_end = min(V.index_of(V.support_end) + 1, V.npts - 1)
    else:
        i_end = V.npts - 1
    n = sys.n_channels
    x_b = V.x[max(i_end, i0)]
    phase = np.exp(1j * kj * x_b)
    Psi = np.zeros((1, n, n), dtype=complex)
    dPsi = np.zeros_like(Psi)
    rows = np.arange(n)
    Psi[:, rows, rows] = phase
    dPsi[:, rows, rows] = 1j * kj * phase
    U, d = _cell_spectra(V, sys, n_sub)
    cells = [c * n_sub + s
             for c in range(max(i_end, i0) - 1, i0 - 1, -1)
             for s in range(n_sub - 1, -1, -1)]
    Psi, dPsi = _propagate(U, d, cells, -V.h / n_sub, np.array([complex(k) ** 2]),
                           Psi, dPsi)
    return Psi[0], dPsi[0]


def _rt_batch(V: PotentialGrid, sys: ChannelSystem, k_values, n_sub: int = 1):
    A, B, kj, _ = _decompose(V, sys, k_values, n_sub)
    n = sys.n_channels
    eye = np.broadcast_to(np.eye(n, dtype=complex), A.shape)
    try:
        T = np.linalg.solve(A, eye)
        R = np.swapaxes(np.linalg.solve(np.swapaxes(A, 1, 2), np.swapaxes(B, 1, 2)), 1, 2)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular wave decomposition: {exc}") from exc
    if not (np.all(np.isfinite(T)) and np.all(np.isfinite(R))):
        bad = np.nonzero(~np.all(np.isfinite(R.reshape(R.shape[0], -1)), axis=1))[0]
        raise NumericalError(
            f"wave decomposition numerically singular at k index {bad[:4]}"
        )
    return R, T, kj


def reflection_transmission(V: PotentialGrid, sys: ChannelSystem, k: complex,
                            n_sub: int = 1):
    """Reflection and transmission matrices (R_L, T_L) at one momentum."""
    km = channel_momenta(sys, k)  # validates axis and threshold avoidance
    if np.any(np.abs(km.kj) < 1e-13):
        raise ValueError("k sits exactly on a threshold")
    R, T, _ = _rt_batch(V, sys, np.array([km.k]), n_sub)
    return R[0], T[0]


@dataclass(eq=False)
class ReflectionTable:
    """Simulated scattering data: R_L and T_L on a positive momentum grid.

    Sub-threshold rows hold the analytic continuation onto the closed-
    channel branch; negative momenta are never stored, consumers use
    R(-k) = conj(R(k)).
    """

    sys: ChannelSystem
    k_grid: np.ndarray            # (nk,) real positive ascending
    R: np.ndarray                 # (nk, N, N) complex
    T: np.ndarray                 # (nk, N, N) complex
    k_max: float
    symmetry_residuals: np.ndarray = field(default=None)

    @property
    def n_channels(self) -> int:
        return self.sys.n_channels


def build_k_grid(sys: ChannelSystem, k_max: float, count: int,
                 window_half_width: float = 0.05, window_points: int = 48,
                 low_k_points: int = 0) -> np.ndarray:
    """Positive momentum grid: uniform base plus threshold clustering.

    Around every open threshold sqrt(eps) the nodes are spaced uniformly
    in the local channel momentum (quadratic clustering in k), which both
    feeds the substitution quadrature of the inversion kernel and resolves
    the square-root branch kinks.  Exact threshold values are excluded.
    """
    if k_max <= 0 or count < 2:
        raise ValueError("need k_max > 0 and count >= 2")
    dk = k_max / count
    nodes = [dk * np.arange(1, count + 1)]
    for eps in sys.open_thresholds():
        rt = math.sqrt(eps)
        if rt >= k_max:
            continue
        lo = max(rt - window_half_width, dk / 4)
        hi = min(rt + window_half_width, k_max)
        s_a = math.sqrt(max(eps - lo * lo, 0.0))
        u_b = math.sqrt(hi * hi - eps)
        i = np.arange(window_points, dtype=float)
        s = s_a * (1.0 - i / window_points)           # excludes s=0 (k=rt)
        u = u_b * (i[::-1] + 1.0) / window_points     # excludes u=0
        nodes.append(np.sqrt(eps - s * s))
        nodes.append(np.sqrt(eps + u * u))
    if low_k_points > 0:
        nodes.append(dk * np.arange(1, low_k_points + 1) / (low_k_points + 1))
    k = np.concatenate(nodes)
    for eps in sys.open_thresholds():
        k = k[np.abs(k - math.sqrt(eps)) > 1e-12]
    k = np.unique(np.round(k, 14))
    return k[(k > 0) & (k <= k_max + 1e-12)]


def reflection_table(V: PotentialGrid, sys: ChannelSystem, k_grid: np.ndarray,
                     n_sub: int = 1, chunk: int = 4096) -> ReflectionTable:
    """Solve the direct problem on a whole momentum grid."""
    k_grid = np.asarray(k_grid, dtype=float)
    if k_grid.ndim != 1 or k_grid.size == 0 or np.any(k_grid <= 0.0) \
            or np.any(np.diff(k_grid) <= 0.0):
        raise ValueError("k_grid must be positive and strictly ascending")
    for eps in sys.open_thresholds():
        if np.any(np.abs(k_grid - math.sqrt(eps)) < 1e-12):
            raise ValueError("k_grid contains an exact threshold")
    R_parts, T_parts, kj_parts = [], [], []
    for lo in range(0, k_grid.size, chunk):
        R, T, kj = _rt_batch(V, sys, k_grid[lo:lo + chunk], n_sub)
        R_parts.append(R)
        T_parts.append(T)
        kj_parts.append(kj)
    R = np.concatenate(R_parts)
    T = np.concatenate(T_parts)
    kj = np.concatenate(kj_parts)
    lhs = np.swapaxes(R, 1, 2) * kj[:, None, :]
    rhs = kj[:, :, None] * R
    resid = np.max(np.abs(lhs - rhs), axis=(1, 2))
    return ReflectionTable(sys=sys, k_grid=k_grid, R=R, T=T,
                           k_max=float(k_grid[-1]), symmetry_residuals=resid)


def wronskian(Psi, dPsi, Phi, dPhi) -> np.ndarray:
    """Generalized Wronskian Psi^T Phi' - Psi'^T Phi (x-independent)."""
    return Psi.T @ dPhi - dPsi.T @ Phi


# ---------------------------------------------------------------------------
# bound states

def _bound_determinant(V: PotentialGrid, sys: ChannelSystem,
                       kappas: np.ndarray) -> np.ndarray:
    """Richardson-extrapolated det W[F_+, F_-] at k = i*kappa (real)."""
    k = 1j * np.asarray(kappas, dtype=float).reshape(-1)
    out = []
    for n_sub in (1, 2):
        A, _, kj, _ = _decompose(V, sys, k, n_sub)
        detA = np.linalg.det(A)
        kt = kj.imag                                   # kappa_tilde_j
        # det W = 2^N prod(kappa_tilde) det A; A is real at imaginary k
        d = (2.0 ** sys.n_channels) * np.prod(kt, axis=1) * detA
        scale = np.maximum(np.abs(d.real), 1e-300)
        if np.any(np.abs(d.imag) > 1e-6 * scale + 1e-12):
            raise NumericalError("bound-state determinant acquired an "
                                 "imaginary part; check the potential grid")
        out.append(d.real)
    d1, d2 = out
    return (4.0 * d2 - d1) / 3.0


def find_bound_states(V: PotentialGrid, sys: ChannelSystem, kappa_max: float,
                      scan_step: float = 1e-3, kappa_min: float = 1e-4,
                      bisect_tol: float = 1e-10) -> list:
    """Scan the imaginary momentum axis for true bound states.

    The window is [kappa_min, kappa_max] capped strictly below
    sqrt(eps_2) when a finite threshold exists (states above it would be
    continuum-embedded and are out of scope).  Returns BoundState records
    with kappa only; residues are filled by residue_matrix.
    """
    hi = float(kappa_max)
    eps = sys.thresholds
    if eps.size > 1 and eps[1] > 0.0:
        hi = min(hi, math.sqrt(eps[1]) * (1.0 - 1e-6))
    if hi <= kappa_min:
        return []
    n_pts = max(int(math.ceil((hi - kappa_min) / scan_step)) + 1, 2)
    grid = np.linspace(kappa_min, hi, n_pts)
    d = _bound_determinant(V, sys, grid)
    scale = float(np.max(np.abs(d)))
    if scale == 0.0:
        raise BoundStateScanError("bound-state determinant vanished identically")
    if abs(d[0]) < 1e-9 * scale or abs(d[-1]) < 1e-9 * scale:
        raise BoundStateScanError(
            "bound-state determinant ~0 at a scan boundary; widen the window")

    roots = []
    sign = np.sign(d)
    for i in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        a, b = grid[i], grid[i + 1]
        fa = d[i]
        while b - a > bisect_tol:
            mid = 0.5 * (a + b)
            fm = _bound_determinant(V, sys, np.array([mid]))[0]
            if fa * fm <= 0.0:
                b = mid
            else:
                a, fa = mid, fm
        roots.append(0.5 * (a + b))

    # a local |d| minimum deep below scale without a sign change flags an
    # unresolved double root
    interior = np.arange(1, n_pts - 1)
    mins = interior[(np.abs(d[interior]) < np.abs(d[interior - 1])) &
                    (np.abs(d[interior]) < np.abs(d[interior + 1])) &
                    (sign[interior - 1] == sign[interior + 1]) &
                    (np.abs(d[interior]) < 1e-8 * scale)]
    if mins.size:
        raise BoundStateScanError(
            f"possible double root near kappa={grid[mins[0]]:.6g} "
            "not resolved by the scan step")

    return [BoundState(kappa=float(r), Q=channel_momenta(sys, 1j * r))
            for r in roots]


@dataclass(eq=False)
class BoundState:
    """One true bound state: kappa, its kinematics, normalization matrix."""

    kappa: float
    Q: ChannelMomenta
    M: np.ndarray = None          # (N, N), real in the standard convention
    T_residue: np.ndarray = None  # raw k-plane residue of T_L (diagnostic)

    @property
    def energy(self) -> float:
        return -self.kappa ** 2

    @property
    def kappa_tilde(self) -> np.ndarray:
        """Per-channel decay constants sqrt(kappa^2 + eps_j)."""
        return self.Q.kj.imag


def _adjugate(a: np.ndarray) -> np.ndarray:
    """Adjugate via Faddeev-LeVerrier; exact at singular matrices."""
    n = a.shape[0]
    m = np.eye(n, dtype=complex)
    for k in range(1, n):
        am = a @ m
        m = am - (np.trace(am) / k) * np.eye(n)
    return (-1.0) ** (n - 1) * m


def residue_matrix(V: PotentialGrid, sys: ChannelSystem, kappa: float,
                   delta: float = 1e-5, n_sub: int = 2):
    """Normalization matrix M = i * Res R_L at the pole k = i*kappa.

    The raw residue B adj(A) / (d det A / dk) is purely imaginary on the
    physical sheet; multiplying by i gives the real matrix that feeds the
    bound-state kernel and the emitted tables.  Returns (M, T_residue)
    with M real up to roundoff (kept complex for inspection) and
    T_residue the raw k-plane residue of T_L.
    """
    A0, B0, _, _ = _decompose(V, sys, np.array([1j * kappa]), n_sub)
    adj = _adjugate(A0[0])

    def ddet(dlt):
        ks = 1j * np.array([kappa + dlt, kappa - dlt])
        A, _, _, _ = _decompose(V, sys, ks, n_sub)
        dets = np.linalg.det(A)
        return (dets[0] - dets[1]) / (2j * dlt)

    d1 = ddet(delta)
    d2 = ddet(delta / 2.0)
    dden = (4.0 * d2 - d1) / 3.0
    if abs(dden) < 1e-300:
        raise NumericalError("vanishing determinant derivative at the pole")
    raw = (B0[0] @ adj) / dden
    M = 1j * raw
    scale = max(float(np.max(np.abs(M))), 1e-300)
    if float(np.max(np.abs(M.imag))) > 1e-6 * scale:
        raise NumericalError(
            "bound-state residue is not purely imaginary; the pole "
            "assumption (simple, on the imaginary axis) failed")
    return M, adj / dden


def compute_bound_states(V: PotentialGrid, sys: ChannelSystem, kappa_max: float,
                         scan_step: float = 1e-3,
                         symmetry_tol: float = 0.02) -> list:
    """find_bound_states plus residues and the M^T Q = Q M symmetry check."""
    states = find_bound_states(V, sys, kappa_max, scan_step)
    for st in states:
        M, Tres = residue_matrix(V, sys, st.kappa)
        st.M = M.real
        st.T_residue = Tres
        q = st.Q.kj
        lhs = st.M.T * q[None, :]
        rhs = q[:, None] * st.M
        defect = float(np.max(np.abs(lhs - rhs)))
        scale = float(np.max(np.abs(st.M * np.abs(q)[None, :]))) or 1.0
        if defect > symmetry_tol * scale:
            raise NumericalError(
                f"residue symmetry M^T Q = Q M violated by {defect / scale:.2%} "
                f"at kappa={st.kappa:.6g}")
    return states
