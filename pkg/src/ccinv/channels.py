"""Channel kinematics on the physical momentum sheet.

An N-channel system is fixed by its ordered threshold energies eps_j
(eps_1 = 0, energies in units of inverse length squared).  At incident
momentum k every channel carries its own asymptotic momentum k_j with

    k_j^2 = k^2 - eps_j.

The branch is the physical one: open channels (k^2 >= eps_j) inherit the
sign of k, closed channels sit on the positive imaginary axis so that
exp(i k_j x) decays for x -> +infinity.  Purely imaginary k = i*kappa
(bound-state kinematics) maps to k_j = i*sqrt(kappa^2 + eps_j).

Consequences used throughout the package:

* k_j(-k) = -conj(k_j(k)) for real k.  Open channels flip sign, closed
  channels keep the +i branch; this is what makes solutions at -k the
  complex conjugates of those at +k.
* the quadrature measure of the inversion kernel carries per-channel
  weights k / k_j, finite away from the thresholds and singular like an
  inverse square root exactly at k = sqrt(eps_j).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelSystem",
    "ChannelMomenta",
    "channel_momenta",
    "reflection_symmetry_residual",
]

_AXIS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ChannelSystem:
    """Channel count plus nondecreasing thresholds, eps_1 = 0."""

    n_channels: int
    thresholds: np.ndarray

    def __post_init__(self):
        eps = np.atleast_1d(np.asarray(self.thresholds, dtype=float)).copy()
        object.__setattr__(self, "thresholds", eps)
        if self.n_channels < 1:
            raise ValueError("need at least one channel")
        if eps.shape != (self.n_channels,):
            raise ValueError(
                f"expected {self.n_channels} thresholds, got shape {eps.shape}"
            )
        if eps[0] != 0.0:
            raise ValueError("first threshold must be exactly zero")
        if np.any(np.diff(eps) < 0.0):
            raise ValueError("thresholds must be nondecreasing")

    @property
    def eps(self) -> np.ndarray:
        return self.thresholds

    def open_thresholds(self) -> np.ndarray:
        """Positive thresholds only (the ones that open at finite k)."""
        return np.unique(self.thresholds[self.thresholds > 0.0])


@dataclass(frozen=True, eq=False)
class ChannelMomenta:
    """Momenta k_j and derivative weights k/k_j at one incident momentum."""

    k: complex
    kj: np.ndarray                 # (N,) complex, physical branch
    derivative_weights: np.ndarray  # (N,) complex, k/k_j with k=0 limits


def _classify(k: complex) -> complex:
    """Snap k onto the real or the positive imaginary axis, or refuse."""
    k = complex(k)
    scale = max(1.0, abs(k))
    if abs(k.imag) <= _AXIS_TOL * scale:
        return complex(k.real, 0.0)
    if abs(k.real) <= _AXIS_TOL * scale and k.imag > 0.0:
        return complex(0.0, k.imag)
    raise ValueError(
        f"momentum {k} is neither real nor on the positive imaginary axis"
    )


def momenta_array(sys: ChannelSystem, k_values: np.ndarray) -> np.ndarray:
    """Vectorized k_j for a batch of momenta.  Returns (nk, N) complex.

    Every entry of ``k_values`` must already lie on the real or positive
    imaginary axis; use :func:`channel_momenta` for validated scalars.
    """
    k = np.asarray(k_values, dtype=complex).reshape(-1)
    eps = sys.thresholds
    ksq = k[:, None] ** 2
    real_k = np.abs(k.imag) <= _AXIS_TOL * np.maximum(1.0, np.abs(k))
    arg = (ksq - eps[None, :]).astype(complex)
    # squaring a negative real k leaves a -0.0 imaginary part, which would
    # drop sqrt onto the lower branch of the cut; real k means real arg
    arg[real_k] = arg[real_k].real
    kj = np.sqrt(arg)
    # principal sqrt gives +i*|.| below threshold (real k) and the positive
    # root above; restore the sign of k on the open-channel branches
    neg = real_k & (k.real < 0.0)
    is_open = (ksq.real - eps[None, :]) >= 0.0
    flip = neg[:, None] & is_open
    kj = np.where(flip, -kj, kj)
    # channel 1 carries k exactly
    kj[:, 0] = k
    return kj


def channel_momenta(sys: ChannelSystem, k: complex) -> ChannelMomenta:
    """Channel momenta and quadrature weights at one incident momentum."""
    k = _classify(k)
    kj = momenta_array(sys, np.array([k]))[0]
    w = np.empty_like(kj)
    if k == 0.0:
        # limit k/k_j: 1 on channels that share the zero threshold, 0 below
        w[:] = np.where(sys.thresholds == 0.0, 1.0, 0.0)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            w = k / kj
        w = np.where(kj == 0.0, np.inf, w)  # exact threshold hit
    return ChannelMomenta(k=k, kj=kj, derivative_weights=w)


def reflection_symmetry_residual(R: np.ndarray, km: ChannelMomenta) -> float:
    """Max-norm of R^T K - K R, the threshold-modified symmetry defect.

    Zero (to solver precision) for any reflection matrix produced by a real
    symmetric potential; grows linearly with an asymmetry R_12 - R_21 in
    the no-threshold case.
    """
    R = np.asarray(R)
    kj = km.kj
    if R.shape != (kj.size, kj.size):
        raise ValueError(f"reflection matrix shape {R.shape} does not match "
                         f"{kj.size} channels")
    lhs = R.T * kj[None, :]   # (R^T K)_ij = R_ji k_j
    rhs = kj[:, None] * R     # (K R)_ij  = k_i R_ij
    return float(np.max(np.abs(lhs - rhs)))
