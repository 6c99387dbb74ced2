"""Analytic potential profiles and their assembly onto a uniform grid.

Three closed-form families cover all benchmark potentials:

* Gaussian            V0 * exp(-b (x-c)^2)
* Multilayer          sum of smoothed slabs; layer i sits between x_{i-1}
                      and x_i at strength V_i, with edge width a
* Sea-saw             n_s triangular teeth of width x_ell starting at x_s,
                      tooth m rising to sign_m * V0 at its midpoint

A potential matrix is assembled element by element (upper triangle given,
symmetry fills the rest) and sampled on a uniform grid wide enough that
every entry is negligible at both edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import expit

from .channels import ChannelSystem
from .errors import ConfigError

__all__ = [
    "GaussianProfile",
    "MultilayerProfile",
    "SeaSawProfile",
    "ZeroProfile",
    "ProfileSpec",
    "eval_profile",
    "PotentialGrid",
    "assemble_potential",
]

SUPPORT_TOL = 1e-6   # relative to max |V|; defines the numerical support


@dataclass(frozen=True)
class GaussianProfile:
    V0: float
    b: float
    c: float

    def __post_init__(self):
        if self.b <= 0.0:
            raise ConfigError("gaussian width parameter b must be positive")


@dataclass(frozen=True)
class MultilayerProfile:
    """Smoothed slab stack: layers ((V_1, x_1), ..., (V_n, x_n)) above x0."""

    a: float
    x0: float
    layers: tuple  # ((V_i, x_i), ...) with x0 < x_1 < ... < x_n

    def __post_init__(self):
        if self.a <= 0.0:
            raise ConfigError("multilayer edge width a must be positive")
        edges = [self.x0] + [float(x) for _, x in self.layers]
        if len(self.layers) == 0:
            raise ConfigError("multilayer needs at least one layer")
        if np.any(np.diff(edges) <= 0.0):
            raise ConfigError("multilayer edges must be strictly increasing")


@dataclass(frozen=True)
class SeaSawProfile:
    V0: float
    x_ell: float
    x_s: float
    signs: tuple  # (+1 | -1, ...), one per tooth

    def __post_init__(self):
        if self.x_ell <= 0.0:
            raise ConfigError("sea-saw tooth width must be positive")
        if len(self.signs) == 0 or any(s not in (-1, 1) for s in self.signs):
            raise ConfigError("sea-saw signs must be a nonempty tuple of +-1")


@dataclass(frozen=True)
class ZeroProfile:
    pass


ProfileSpec = Union[GaussianProfile, MultilayerProfile, SeaSawProfile, ZeroProfile]


def eval_profile(spec: ProfileSpec, x) -> np.ndarray:
    """Evaluate one profile at x (scalar or array)."""
    x = np.asarray(x, dtype=float)
    if isinstance(spec, GaussianProfile):
        out = spec.V0 * np.exp(-spec.b * (x - spec.c) ** 2)
    elif isinstance(spec, MultilayerProfile):
        # expit keeps the slab edges overflow-free for tiny a
        out = np.zeros_like(x)
        lower = spec.x0
        for v, upper in spec.layers:
            out += v * (expit((x - lower) / spec.a) - expit((x - upper) / spec.a))
            lower = upper
    elif isinstance(spec, SeaSawProfile):
        out = np.zeros_like(x)
        amp = 2.0 * spec.V0 / spec.x_ell
        for m, s in enumerate(spec.signs, start=1):
            left = spec.x_s + (m - 1) * spec.x_ell
            mid = spec.x_s + (m - 0.5) * spec.x_ell
            right = spec.x_s + m * spec.x_ell
            rise = (x >= left) & (x <= mid)
            fall = (x > mid) & (x <= right)
            out[rise] += amp * s * (x[rise] - left)
            out[fall] += amp * s * (right - x[fall])
    elif isinstance(spec, ZeroProfile):
        out = np.zeros_like(x)
    else:
        raise TypeError(f"unknown profile spec {type(spec).__name__}")
    return out


@dataclass(eq=False)
class PotentialGrid:
    """Real symmetric N x N potential sampled on a uniform grid.

    values[p] is the matrix at x[p].  support_start / support_end bracket
    the numerical support: every entry is below support_tol * max|V|
    outside [support_start, support_end].
    """

    x: np.ndarray          # (npts,) uniform
    values: np.ndarray     # (npts, N, N) float
    h: float
    support_start: float
    support_end: float
    support_tol: float = SUPPORT_TOL

    @property
    def x_lo(self) -> float:
        return float(self.x[0])

    @property
    def x_hi(self) -> float:
        return float(self.x[-1])

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    @property
    def npts(self) -> int:
        return self.x.size

    def index_of(self, xv: float) -> int:
        """Grid index of a node; xv must sit on the grid."""
        idx = int(round((xv - self.x_lo) / self.h))
        if idx < 0 or idx >= self.npts or abs(self.x[idx] - xv) > 1e-9 * max(1.0, abs(xv)) + 1e-12:
            raise ValueError(f"x={xv} is not a node of the grid")
        return idx

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def _support_indices(x: np.ndarray, values: np.ndarray, tol_rel: float):
    vmax = float(np.max(np.abs(values)))
    if vmax == 0.0:
        return None, None, 0.0
    tol = tol_rel * vmax
    above = np.max(np.abs(values), axis=(1, 2)) > tol
    idx = np.nonzero(above)[0]
    if idx.size == 0:
        return None, None, vmax
    return int(idx[0]), int(idx[-1]), vmax


def grid_from_values(x: np.ndarray, values: np.ndarray,
                     support_tol: float = SUPPORT_TOL) -> PotentialGrid:
    """Wrap sampled values into a PotentialGrid, recomputing the support."""
    x = np.asarray(x, dtype=float)
    values = np.asarray(values, dtype=float)
    if x.ndim != 1 or values.ndim != 3 or values.shape[0] != x.size:
        raise ValueError("values must be (npts, N, N) matching x")
    h = float(x[1] - x[0])
    if np.max(np.abs(np.diff(x) - h)) > 1e-9 * max(abs(h), 1.0):
        raise ValueError("grid must be uniform")
    i0, i1, _ = _support_indices(x, values, support_tol)
    if i0 is None:
        start = end = 0.0
    else:
        start, end = float(x[i0]), float(x[i1])
    return PotentialGrid(x=x, values=values, h=h,
                         support_start=start, support_end=end,
                         support_tol=support_tol)


def assemble_potential(sys: ChannelSystem, element_specs: dict,
                       grid: tuple, support_tol: float = SUPPORT_TOL) -> PotentialGrid:
    """Sample an upper-triangle map of profiles onto a uniform grid.

    Parameters
    ----------
    element_specs : dict mapping (i, j) with 0 <= i <= j < N to a profile.
        Missing elements are zero.
    grid : (x_lo, x_hi, h); the span must be an integer number of steps.
    """
    x_lo, x_hi, h = (float(v) for v in grid)
    if h <= 0.0 or x_hi <= x_lo:
        raise ConfigError("grid must satisfy x_lo < x_hi and h > 0")
    m = (x_hi - x_lo) / h
    if abs(m - round(m)) > 1e-9:
        raise ConfigError(f"grid span ({x_lo}, {x_hi}) is not a multiple of h={h}")
    x = x_lo + h * np.arange(int(round(m)) + 1)

    n = sys.n_channels
    values = np.zeros((x.size, n, n))
    for (i, j), spec in element_specs.items():
        if not (0 <= i <= j < n):
            raise ConfigError(f"element index ({i}, {j}) outside the upper triangle")
        vij = eval_profile(spec, x)
        values[:, i, j] = vij
        if i != j:
            values[:, j, i] = vij

    i0, i1, vmax = _support_indices(x, values, support_tol)
    if vmax == 0.0:
        return PotentialGrid(x=x, values=values, h=h,
                             support_start=0.0, support_end=0.0,
                             support_tol=support_tol)
    if i0 == 0 or i1 == x.size - 1:
        raise ConfigError(
            f"grid ({x_lo}, {x_hi}) too narrow: potential above "
            f"{support_tol:g}*max|V| at the boundary"
        )
    return PotentialGrid(x=x, values=values, h=h,
                         support_start=float(x[i0]), support_end=float(x[i1]),
                         support_tol=support_tol)
