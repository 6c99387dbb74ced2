"""Delimited text formats for tables, bound states, potentials, kernels.

All numeric output uses 17 significant digits so every file round-trips
through its own reader bit-exactly.  Data files carry no timestamps;
callers may pass extra header entries (e.g. a config hash) to tag
provenance without breaking determinism.
"""

from __future__ import annotations

import numpy as np

from .channels import ChannelSystem, channel_momenta
from .errors import ConfigError, InconsistentDataError
from .forward import BoundState, ReflectionTable
from .profiles import PotentialGrid, grid_from_values

__all__ = [
    "write_reflection_table", "read_reflection_table",
    "write_bound_states", "read_bound_states",
    "write_potential", "read_potential",
    "write_kernel_dump",
]

_FMT = "%.17g"
_IMAG_EMIT = 1e-9


def _fmt_row(values) -> str:
    return " ".join(_FMT % v for v in values)


def _extra_lines(extra: dict) -> list:
    return [f"# {k}={v}" for k, v in (extra or {}).items()]


def _read_rows(path):
    header = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        key, _, val = tok.partition("=")
                        header.setdefault(key, val)
                continue
            rows.append([float(t) for t in line.split()])
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ConfigError(f"{path}: ragged rows")
    return header, np.array(rows)


def write_reflection_table(path, table: ReflectionTable, extra: dict = None):
    n = table.n_channels
    eps = ",".join(_FMT % e for e in table.sys.eps)
    lines = [f"# N={n} kmax={_FMT % table.k_max} eps={eps}"]
    lines += _extra_lines(extra)
    for m, k in enumerate(table.k_grid):
        row = [k]
        for mat in (table.R[m], table.T[m]):
            for i in range(n):
                for j in range(n):
                    row += [mat[i, j].real, mat[i, j].imag]
        lines.append(_fmt_row(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_reflection_table(path) -> ReflectionTable:
    header, data = _read_rows(path)
    try:
        n = int(header["N"])
        eps = tuple(float(t) for t in header["eps"].split(","))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: bad or missing reflection header") from exc
    if len(eps) != n:
        raise ConfigError(f"{path}: eps count does not match N")
    want = 1 + 4 * n * n
    if data.shape[1] != want:
        raise ConfigError(
            f"{path}: expected {want} columns for N={n}, got {data.shape[1]}")
    k = data[:, 0]
    if np.any(np.diff(k) <= 0) or k[0] <= 0:
        raise InconsistentDataError(f"{path}: momentum column not ascending "
                                    "positive")
    body = data[:, 1:].reshape(-1, 2, n, n, 2)
    cplx = body[..., 0] + 1j * body[..., 1]
    sys = ChannelSystem(n, eps)
    k_max = float(header.get("kmax", k[-1]))
    return ReflectionTable(sys=sys, k_grid=k, R=np.ascontiguousarray(cplx[:, 0]),
                           T=np.ascontiguousarray(cplx[:, 1]), k_max=k_max)


def write_bound_states(path, states: list, sys: ChannelSystem,
                       extra: dict = None):
    n = sys.n_channels
    eps = ",".join(_FMT % e for e in sys.eps)
    with_imag = any(st.M is not None
                    and np.max(np.abs(np.asarray(st.M).imag)) > _IMAG_EMIT
                    for st in states)
    lines = [f"# N={n} eps={eps}"]
    lines += _extra_lines(extra)
    for st in states:
        M = np.asarray(st.M if st.M is not None else np.zeros((n, n)))
        row = [st.kappa, st.energy]
        for i in range(n):
            for j in range(n):
                if with_imag:
                    row += [complex(M[i, j]).real, complex(M[i, j]).imag]
                else:
                    row.append(complex(M[i, j]).real)
        lines.append(_fmt_row(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_bound_states(path, sys: ChannelSystem) -> list:
    header, data = _read_rows(path)
    n = sys.n_channels
    if "N" in header and int(header["N"]) != n:
        raise ConfigError(f"{path}: channel count mismatch")
    real_w, cplx_w = 2 + n * n, 2 + 2 * n * n
    if data.shape[1] == real_w:
        mats = data[:, 2:].reshape(-1, n, n)
    elif data.shape[1] == cplx_w:
        body = data[:, 2:].reshape(-1, n, n, 2)
        mats = body[..., 0] + 1j * body[..., 1]
    else:
        raise ConfigError(f"{path}: expected {real_w} or {cplx_w} columns")
    states = []
    for row, M in zip(data, mats):
        kappa = float(row[0])
        if kappa <= 0:
            raise InconsistentDataError(f"{path}: nonpositive kappa")
        if abs(row[1] + kappa ** 2) > 1e-9 * max(kappa ** 2, 1e-12):
            raise InconsistentDataError(f"{path}: energy column disagrees "
                                        "with -kappa^2")
        states.append(BoundState(kappa=kappa, Q=channel_momenta(sys, 1j * kappa),
                                 M=np.real_if_close(M)))
    return states


def write_potential(path, grid: PotentialGrid, extra: dict = None):
    n = grid.n_channels
    lines = [f"# N={n} h={_FMT % grid.h}"]
    lines += _extra_lines(extra)
    for m, x in enumerate(grid.x):
        row = [x]
        for i in range(n):
            for j in range(n):
                row.append(grid.values[m, i, j])
        lines.append(_fmt_row(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_potential(path, support_tol: float = 1e-6) -> PotentialGrid:
    header, data = _read_rows(path)
    try:
        n = int(header["N"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: bad or missing potential header") from exc
    if data.shape[1] != 1 + n * n:
        raise ConfigError(f"{path}: expected {1 + n * n} columns for N={n}")
    x = data[:, 0]
    vals = data[:, 1:].reshape(-1, n, n)
    asym = float(np.max(np.abs(vals - vals.transpose(0, 2, 1))))
    if asym > 1e-9 * max(float(np.max(np.abs(vals))), 1e-12):
        raise InconsistentDataError(f"{path}: potential matrix not symmetric")
    vals = 0.5 * (vals + vals.transpose(0, 2, 1))
    grid = grid_from_values(x, vals, support_tol=support_tol)
    if "h" in header and abs(float(header["h"]) - grid.h) > 1e-9 * grid.h:
        raise ConfigError(f"{path}: header step disagrees with data")
    return grid


def write_kernel_dump(path, kernel, extra: dict = None):
    """Rows `x y Re(rho_11) Im(rho_11) ...` over the working grid."""
    xs = kernel.x_grid
    n = kernel.sys.n_channels
    lines = [f"# N={n} points={xs.size}"]
    lines += _extra_lines(extra)
    for a, x in enumerate(xs):
        for b, y in enumerate(xs):
            row = [x, y]
            for i in range(n):
                for j in range(n):
                    v = complex(kernel.cache[a, b, i, j])
                    row += [v.real, v.imag]
            lines.append(_fmt_row(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
