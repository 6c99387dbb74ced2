"""Input kernel of the inversion: reflection integral plus bound-state sum.

The scattering part is the full-line momentum integral

    rho_s(x,y) = (1/2pi) Int dk  k e^{-iKx} R_L(k) e^{-iKy} K^{-1},

folded onto k > 0 through R(-k) = conj(R(k)) and the branch map
k_j(-k) = -conj(k_j(k)), which turn the negative half-line into the
complex conjugate of the positive one; the result is (1/pi) Re of the
positive-k integral and is real.

The per-column measure k/k_j blows up like an inverse square root at the
channel threshold k = sqrt(eps_j).  Inside a window of half-width delta
around each threshold the integration variable is switched to the local
channel momentum itself (k dk = k_j dk_j), which absorbs the factor
exactly: below threshold k_j = i s and the window contributes
-i Int g ds, above it contributes Int g du, both with plain trapezoids
in the new variable and a linear extrapolation onto the s = 0 / u = 0
endpoint that the momentum grid excludes.  Outside the windows a plain
trapezoid in k applies with the measure factor evaluated at the nodes.
All of this is precomputed as one complex weight per (node, column), so
kernel values on a working grid reduce to small matrix products.

The bound-state part is the real separable sum

    rho_b_ij(x,y) = - sum_alpha e^{kt_i x} M_ij e^{kt_j y} kappa/kt_j,

kt_j = sqrt(kappa^2 + eps_j), with M the normalization matrix stored on
BoundState (negative diagonal for an attractive-type state; the single
channel case collapses to +c^2 e^{kappa(x+y)}).  For data belonging to
one potential the two parts cancel to the left of the support, which is
recorded as the compensation residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import momenta_array
from .errors import NumericalError, ThresholdGridError
from .forward import ReflectionTable

__all__ = [
    "ScatteringIntegral",
    "InputKernel",
    "scattering_kernel",
    "bound_kernel",
    "total_kernel",
]

_WINDOW_TOL = 1e-9
_EXP_GUARD = 700.0


def _plain_weights(w, k, f, idx):
    """Trapezoid in k over the node run idx, measure factor f absorbed."""
    if idx.size < 2:
        return
    d = np.diff(k[idx])
    w[idx[:-1]] += 0.5 * d * f[idx[:-1]]
    w[idx[1:]] += 0.5 * d * f[idx[1:]]


def _endpoint_weights(w, t, idx, factor):
    """Extrapolated [0, t_0] stub for a variable excluded at 0.

    t holds the (ascending) variable values at nodes idx; the integrand is
    extrapolated linearly onto t = 0 from the first two nodes and the stub
    is integrated by one trapezoid.  factor carries the measure weight per
    node (already includes any -i from the substitution).
    """
    t0, t1 = t[0], t[1]
    r = t0 / (t1 - t0)
    w[idx[0]] += 0.5 * t0 * (2.0 + r) * factor[0]
    w[idx[1]] -= 0.5 * t0 * r * factor[1]


def _column_weights(k, kj_col, eps_j, delta, min_pts):
    """Complex quadrature weights for one kernel column."""
    nk = k.size
    w = np.zeros(nk, dtype=complex)
    f = k / kj_col
    rt = math.sqrt(eps_j) if eps_j > 0.0 else 0.0
    k_max = k[-1]

    if rt <= 0.0 or rt >= k_max:
        # no reachable threshold: measure factor smooth on the whole range
        _plain_weights(w, k, f, np.arange(nk))
        if eps_j <= 0.0:
            _endpoint_weights(w, k, np.array([0, 1]), f[:2])
        else:
            # integrand vanishes linearly at k = 0 (factor k/k_j -> 0)
            w[0] += 0.5 * k[0] * f[0]
        return w

    below = np.nonzero((k >= rt - delta - _WINDOW_TOL) & (k < rt))[0]
    above = np.nonzero((k > rt) & (k <= rt + delta + _WINDOW_TOL))[0]
    chan_note = f"threshold sqrt({eps_j:g})"
    if below.size < min_pts:
        raise ThresholdGridError(
            f"only {below.size} grid points below {chan_note}; need {min_pts}",
            channel=None, n_points=int(below.size))
    if above.size < min_pts:
        raise ThresholdGridError(
            f"only {above.size} grid points above {chan_note}; need {min_pts}",
            channel=None, n_points=int(above.size))

    left = np.arange(0, below[0] + 1)
    right = np.arange(above[-1], nk)
    _plain_weights(w, k, f, left)
    _endpoint_weights(w, k, np.array([0, 1]), f[:2])
    _plain_weights(w, k, f, right)

    # below threshold, ascending s (descending k); contributes -i Int g ds
    rev = below[::-1]
    s = np.sqrt(eps_j - k[rev] ** 2)
    ds = np.diff(s)
    w[rev[:-1]] += -0.5j * ds
    w[rev[1:]] += -0.5j * ds
    _endpoint_weights(w, s, rev, np.full(2, -1j))

    # above threshold, ascending u; contributes + Int g du
    u = np.sqrt(k[above] ** 2 - eps_j)
    du = np.diff(u)
    w[above[:-1]] += 0.5 * du
    w[above[1:]] += 0.5 * du
    _endpoint_weights(w, u, above, np.ones(2))
    return w


class ScatteringIntegral:
    """Precomputed quadrature for the reflection part of the input kernel."""

    def __init__(self, table: ReflectionTable, window_half_width: float = 0.05,
                 min_window_points: int = 8):
        self.table = table
        self.sys = table.sys
        self.delta = float(window_half_width)
        k = table.k_grid
        self.kj = momenta_array(table.sys, k)          # (nk, N)
        n = table.n_channels
        self.weights = np.empty((k.size, n), dtype=complex)
        for j in range(n):
            try:
                self.weights[:, j] = _column_weights(
                    k, self.kj[:, j], table.sys.eps[j], self.delta,
                    min_window_points)
            except ThresholdGridError as exc:
                raise ThresholdGridError(
                    f"channel {j + 1}: {exc}", channel=j + 1,
                    n_points=exc.n_points) from None
        self._wr = self.weights[:, None, :] * table.R   # (nk, N, N)

    def _exponents(self, xs: np.ndarray) -> np.ndarray:
        """exp(-i k_j x) for every node and channel, shape (nx, nk, N)."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        arg = -1j * self.kj[None, :, :] * xs[:, None, None]
        if float(np.max(arg.real)) > _EXP_GUARD:
            raise NumericalError("closed-channel exponential overflow; "
                                 "working box too wide for these thresholds")
        return np.exp(arg)

    def evaluate(self, x: float, y: float) -> np.ndarray:
        """Kernel value at one point, complex N x N (imag ~ 0)."""
        ex = self._exponents(np.array([x]))[0]          # (nk, N)
        ey = self._exponents(np.array([y]))[0]
        val = np.einsum("ni,nij,nj->ij", ex, self._wr, ey)
        return (val.real / math.pi).astype(complex)

    def cache(self, xs: np.ndarray, ys: np.ndarray = None) -> np.ndarray:
        """Kernel on a grid product, real array (nx, ny, N, N)."""
        xs = np.asarray(xs, dtype=float)
        ys = xs if ys is None else np.asarray(ys, dtype=float)
        ex = self._exponents(xs)                        # (nx, nk, N)
        ey = self._exponents(ys)
        n = self.table.n_channels
        out = np.empty((xs.size, ys.size, n, n))
        for i in range(n):
            for j in range(n):
                m = ex[:, :, i] * self._wr[None, :, i, j]
                out[:, :, i, j] = (m @ ey[:, :, j].T).real / math.pi
        return out


def scattering_kernel(table: ReflectionTable, x: float, y: float) -> np.ndarray:
    """One-shot reflection-integral kernel value (builds weights each call)."""
    return ScatteringIntegral(table).evaluate(x, y)


def _bound_terms(states, n):
    """Per-state (kt, M, col_factor) tuples with kt the decay constants."""
    terms = []
    for st in states:
        kt = st.kappa_tilde
        if kt.shape != (n,):
            raise ValueError("bound state has wrong channel count")
        if st.M is None:
            raise ValueError("bound state carries no normalization matrix")
        terms.append((kt, np.asarray(st.M, dtype=float), st.kappa / kt))
    return terms


def bound_kernel(states: list, x: float, y: float, n_channels: int = None) -> np.ndarray:
    """Bound-state part of the input kernel at one point."""
    if not states:
        if n_channels is None:
            raise ValueError("empty state list needs explicit n_channels")
        return np.zeros((n_channels, n_channels), dtype=complex)
    n = states[0].Q.kj.size
    out = np.zeros((n, n), dtype=float)
    for kt, M, colf in _bound_terms(states, n):
        out -= np.exp(kt * x)[:, None] * M * (np.exp(kt * y) * colf)[None, :]
    return out.astype(complex)


def _bound_cache(states, xs, ys, n):
    out = np.zeros((xs.size, ys.size, n, n))
    for kt, M, colf in _bound_terms(states, n):
        ex = np.exp(np.outer(xs, kt))                   # (nx, N)
        ey = np.exp(np.outer(ys, kt)) * colf[None, :]
        out -= ex[:, None, :, None] * M[None, None, :, :] * ey[None, :, None, :]
    return out


@dataclass(eq=False)
class InputKernel:
    """Cached input kernel on a working grid, with quality metrics.

    symmetry_residual is max |rho(x,y) - rho^T(y,x)| over the grid;
    compensation_residual is the max |rho| on the region y < x < -0.5
    divided by the global max (small only when the bound data belong to
    the reflection data; deliberately large on the partner path where the
    bound part is omitted).
    """

    sys: object
    k_max: float
    x_grid: np.ndarray
    cache: np.ndarray                  # (nx, nx, N, N) real, total kernel
    scattering_cache: np.ndarray
    bound_cache: np.ndarray
    states: list
    scattering: ScatteringIntegral
    symmetry_residual: float
    compensation_residual: float = None

    def scattering_part(self, x: float, y: float) -> np.ndarray:
        return self.scattering.evaluate(x, y)

    def bound_part(self, x: float, y: float) -> np.ndarray:
        return bound_kernel(self.states, x, y, self.sys.n_channels)

    def total(self, x: float, y: float) -> np.ndarray:
        return self.scattering_part(x, y) + self.bound_part(x, y)


def total_kernel(table: ReflectionTable, states: list,
                 working_grid: np.ndarray,
                 window_half_width: float = 0.05) -> InputKernel:
    """Build and cache the full kernel rho = rho_s + rho_b on a grid."""
    xs = np.asarray(working_grid, dtype=float)
    if xs.ndim != 1 or xs.size < 2 or np.any(np.diff(xs) <= 0):
        raise ValueError("working grid must be 1-D ascending")
    integ = ScatteringIntegral(table, window_half_width=window_half_width)
    sc = integ.cache(xs)
    bc = _bound_cache(states or [], xs, xs, table.n_channels)
    tot = sc + bc
    sym = float(np.max(np.abs(tot - tot.transpose(1, 0, 3, 2))))
    comp = None
    scale = float(np.max(np.abs(tot)))
    mask = xs < -0.5
    # quadrature dust on a zero table would make comp a meaningless 0/0
    if np.any(mask) and scale > 1e-13:
        region = tot[np.ix_(mask, mask)]
        ix, iy = np.tril_indices(region.shape[0], k=-1)   # y < x strictly
        if ix.size:
            comp = float(np.max(np.abs(region[ix, iy]))) / scale
    return InputKernel(sys=table.sys, k_max=table.k_max, x_grid=xs,
                       cache=tot, scattering_cache=sc, bound_cache=bc,
                       states=list(states or []), scattering=integ,
                       symmetry_residual=sym, compensation_residual=comp)
