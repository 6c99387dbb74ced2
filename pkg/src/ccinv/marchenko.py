"""Marchenko integral equation: transformation kernel and potential.

For each fixed x the equation

    B(x,y) + rho(x,y) + Int_{z_lo}^{x} B(x,z) rho(z,y) dz = 0,   y <= x,

is discretized by the trapezoid rule on the working grid and solved as
one dense linear system for the matrix row B(x, .).  The lower limit
z_lo is -x for consistent data (the transformation kernel of a potential
supported on x >= 0 lives on the characteristic triangle |y| <= x) and
the left edge of the working box when the bound part of the kernel has
been deliberately omitted: the partner potential picks up a tail on the
negative axis and its kernel support widens accordingly.

The potential follows from the diagonal limit, V(x) = 2 dB(x,x)/dx,
differentiated with 4th-order central stencils (one-sided at the ends).
Two self-consistency numbers are recorded: the asymmetry of V before
symmetrization and the defect of the trace identity
B(x,x) = 1/2 Int_{x_lo}^{x} V(t) dt.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import dgecon

from .errors import InconsistentDataError, NumericalError
from .kernel import InputKernel
from .profiles import PotentialGrid, grid_from_values

__all__ = [
    "TransformationKernel",
    "ReconstructionResult",
    "solve_row",
    "reconstruct",
]

_COND_LIMIT = 1e12


@dataclass(eq=False)
class TransformationKernel:
    """One row of the transformation kernel: B(x, y) on y_grid up to x."""

    x: float
    y_grid: np.ndarray
    B: np.ndarray                 # (ny, N, N)
    condition: float


def _row_system(kernel: InputKernel, ix: int, iz_lo: int):
    """Dense system for the row x = x_grid[ix] with z, y >= x_grid[iz_lo]."""
    xs = kernel.x_grid
    h = xs[1] - xs[0]
    nz = ix - iz_lo + 1
    n = kernel.sys.n_channels
    rho = kernel.cache[iz_lo:ix + 1, iz_lo:ix + 1]      # (nz, nz, N, N), (z, y)
    w = np.full(nz, h)
    w[0] = w[-1] = 0.5 * h
    # unknown U = B(x, z_m) laid out as one (N, nz*N) row block;
    # U (I + G) = -P with G[m,n] = w_m rho(z_m, y_n)
    G = (w[:, None, None, None] * rho).transpose(0, 2, 1, 3).reshape(nz * n, nz * n)
    G += np.eye(nz * n)
    P = kernel.cache[ix, iz_lo:ix + 1].transpose(1, 0, 2).reshape(n, nz * n)
    return G, P, nz, n


def solve_row(kernel: InputKernel, x: float, h: float = None,
              extended: bool = False) -> TransformationKernel:
    """Solve the Marchenko equation for B(x, .) at one x.

    extended=False limits the integration to [-x, x] (consistent-data
    support); extended=True uses the whole working box from its left
    edge, as required after bound-state omission.
    """
    xs = kernel.x_grid
    grid_h = xs[1] - xs[0]
    if h is not None and abs(h - grid_h) > 1e-9 * grid_h:
        raise ValueError("h must match the kernel working grid step")
    ix = int(round((x - xs[0]) / grid_h))
    if ix < 0 or ix >= xs.size or abs(xs[ix] - x) > 1e-9:
        raise ValueError(f"x={x} is not a node of the kernel working grid")
    if extended:
        iz_lo = 0
    else:
        iz_lo = int(round((-x - xs[0]) / grid_h))
        if iz_lo < 0 or abs(xs[iz_lo] + x) > 1e-9:
            raise ValueError(f"working grid does not contain -x for x={x}")
    if ix == iz_lo:
        B = -kernel.cache[ix, ix][None, :, :]
        return TransformationKernel(x=float(x), y_grid=xs[ix:ix + 1],
                                    B=B.astype(complex), condition=1.0)

    G, P, nz, n = _row_system(kernel, ix, iz_lo)
    Gt = np.ascontiguousarray(G.T)
    anorm = float(np.linalg.norm(Gt, 1))
    lu, piv = lu_factor(Gt, overwrite_a=True)
    rcond, info = dgecon(lu, anorm, norm="1")
    cond = anorm_cond = 1.0 / max(float(rcond), 1e-300)
    if info != 0 or anorm_cond > _COND_LIMIT:
        raise NumericalError(
            f"Marchenko system at x={x:g} has condition number {cond:.3g}; "
            "kernel data inconsistent or grid pathological")
    U = lu_solve((lu, piv), -P.T).T                     # (N, nz*N)
    B = U.reshape(n, nz, n).transpose(1, 0, 2)
    return TransformationKernel(x=float(x), y_grid=xs[iz_lo:ix + 1],
                                B=B.astype(complex), condition=cond)


def _derivative(D: np.ndarray, h: float) -> np.ndarray:
    """4th-order d/dx along axis 0, one-sided stencils at the edges."""
    out = np.empty_like(D)
    if D.shape[0] < 5:
        return np.gradient(D, h, axis=0)
    out[2:-2] = (D[:-4] - 8 * D[1:-3] + 8 * D[3:-1] - D[4:]) / (12 * h)
    fwd = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12 * h)
    for i in (0, 1):
        out[i] = np.tensordot(fwd, D[i:i + 5], axes=(0, 0))
        out[-1 - i] = -np.tensordot(fwd, D[-1 - i::-1][:5], axes=(0, 0))
    return out


@dataclass(eq=False)
class ReconstructionResult:
    """Reconstructed potential plus the solver's quality metrics."""

    potential: PotentialGrid
    D: np.ndarray                  # (nx, N, N) diagonal kernel trace B(x,x)
    x: np.ndarray
    asymmetry: float               # max |V - V^T| before symmetrization
    trace_residual: float          # defect of B(x,x) = 1/2 Int tr V, relative
    max_condition: float


def reconstruct(kernel: InputKernel, x_lo: float = None, x_hi: float = None,
                extended: bool = False,
                asymmetry_limit: float = 0.05) -> ReconstructionResult:
    """Recover the potential from a cached input kernel.

    Solves one Marchenko row per grid node in [x_lo, x_hi] and
    differentiates the diagonal trace.  With extended=False the rows use
    the triangle [-x, x] and reconstruction starts at the first
    nonnegative node; with extended=True every row integrates from the
    left edge of the working box, which must then sit deep enough that
    the kernel has decayed there.
    """
    xs = kernel.x_grid
    h = xs[1] - xs[0]
    n = kernel.sys.n_channels
    if x_hi is None:
        x_hi = xs[-1]
    if x_lo is None:
        x_lo = xs[0] if extended else 0.0
    sel = np.nonzero((xs >= x_lo - 1e-9) & (xs <= x_hi + 1e-9))[0]
    if not extended:
        sel = sel[xs[sel] >= -1e-9]
    if sel.size < 5:
        raise ValueError("reconstruction range must contain at least 5 nodes")

    D = np.empty((sel.size, n, n))
    max_cond = 0.0
    for m, ix in enumerate(sel):
        row = solve_row(kernel, xs[ix], extended=extended)
        D[m] = row.B[-1].real
        max_cond = max(max_cond, row.condition)

    V = 2.0 * _derivative(D, h)
    asym = float(np.max(np.abs(V - V.transpose(0, 2, 1))))
    scale = float(np.max(np.abs(V))) or 1.0
    if asym > asymmetry_limit * scale:
        raise InconsistentDataError(
            f"reconstructed potential asymmetry {asym / scale:.2%} exceeds "
            f"{asymmetry_limit:.0%}; input data inconsistent")
    V = 0.5 * (V + V.transpose(0, 2, 1))

    half_int = 0.5 * cumulative_trapezoid(V, dx=h, axis=0, initial=0.0)
    # the trace identity pins down D only up to the value at the range start
    defect = (D - D[0]) - half_int
    d_scale = float(np.max(np.abs(D - D[0]))) or 1.0
    trace_res = float(np.max(np.abs(defect))) / d_scale

    grid = grid_from_values(xs[sel], V)
    return ReconstructionResult(potential=grid, D=D, x=xs[sel],
                                asymmetry=asym / scale,
                                trace_residual=trace_res,
                                max_condition=max_cond)
