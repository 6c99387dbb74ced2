"""Command line front end.

Subcommands: forward, invert, roundtrip, susy-partner, fit-bound.  Each
reads one config file (see `config`); a few common knobs have command
line overrides.  Data files are plain delimited text (see `io`) and the
report paths also render PNG figures next to them.

Exit codes: 0 success, 2 config or input validation error, 3 numerical
failure, 4 tolerance or fit-gate failure.
"""

from __future__ import annotations

import argparse
import os
import sys as _sys

import numpy as np

from . import io as ccio
from .boundfit import FitRegion, fit_bound_states
from .config import RunConfig, load_config
from .errors import (CcinvError, ConfigError, FitRejectedError,
                     ToleranceFailure)
from .forward import (build_k_grid, compute_bound_states, find_bound_states,
                      reflection_table)
from .kernel import ScatteringIntegral, total_kernel
from .marchenko import reconstruct
from .profiles import PotentialGrid, assemble_potential
from .susy import partner_via_omission

__all__ = ["main"]


def _load_potential(cfg: RunConfig) -> PotentialGrid:
    if cfg.potential_file is not None:
        grid = ccio.read_potential(cfg.potential_file)
        if grid.n_channels != cfg.sys.n_channels:
            raise ConfigError(
                f"potential file has {grid.n_channels} channels, "
                f"config says {cfg.sys.n_channels}")
        return grid
    return assemble_potential(cfg.sys, cfg.element_specs,
                              (cfg.x_lo, cfg.x_hi, cfg.h))


def _k_grid(cfg: RunConfig, count=None):
    return build_k_grid(cfg.sys, cfg.k_max, count or cfg.count,
                        window_half_width=cfg.window_half_width,
                        window_points=cfg.window_points,
                        low_k_points=cfg.low_k_points)


def _box_half_width(cfg: RunConfig, V: PotentialGrid) -> float:
    X = cfg.kernel_box
    if X is None:
        X = max(abs(V.support_start), abs(V.support_end)) + 0.5
    # Marchenko rows need x and -x on the same grid, so snap to a node.
    return cfg.h * int(np.ceil(X / cfg.h - 1e-9))


def _working_grid(x_lo: float, x_hi: float, h: float) -> np.ndarray:
    return np.round(np.arange(x_lo, x_hi + h / 2, h), 10)


def _bound_states(cfg: RunConfig, V, table):
    """Bound-state list according to bound.mode."""
    if cfg.bound_mode in ("none", "omit"):
        return []
    if cfg.bound_mode == "forward":
        return compute_bound_states(V, cfg.sys, cfg.kappa_max,
                                    scan_step=cfg.scan_step)
    if cfg.bound_mode == "fit":
        if cfg.n_b < 1:
            raise ConfigError("bound.mode = fit needs bound.n_b >= 1")
        scat = ScatteringIntegral(table, cfg.window_half_width)
        return fit_bound_states(scat, cfg.sys, cfg.n_b, _fit_region(cfg))
    raise ConfigError(f"bound.mode {cfg.bound_mode!r} needs an explicit "
                      "bound-state file here")


def _fit_region(cfg: RunConfig) -> FitRegion:
    s_lo = cfg.fit_s_lo if cfg.fit_s_lo is not None else -8.0
    return FitRegion(s_lo=s_lo, s_hi=cfg.fit_s_hi, n_samples=cfg.fit_n_samples)


def _compare_elements(orig: PotentialGrid, rec: PotentialGrid):
    """Per-element sup errors of rec vs orig on their common nodes.

    All elements share one scale, max|V| over the comparison window
    (absolute error if V is identically zero there).
    """
    lo = max(orig.x[0], rec.x[0]) - 1e-9
    hi = min(orig.x[-1], rec.x[-1]) + 1e-9
    so = (orig.x >= lo) & (orig.x <= hi)
    sr = (rec.x >= lo) & (rec.x <= hi)
    xo, xr = orig.x[so], rec.x[sr]
    if xo.size != xr.size or np.max(np.abs(xo - xr)) > 1e-8:
        raise ConfigError("potential grids do not share nodes; "
                          "use matching h and box")
    diff = np.abs(orig.values[so] - rec.values[sr])
    scale = float(np.max(np.abs(orig.values[so]))) or 1.0
    return diff.reshape(diff.shape[0], -1).max(axis=0).reshape(
        orig.n_channels, orig.n_channels) / scale


def _fmt_opt(value, spec=".3e"):
    # compensation is undefined for an identically zero kernel
    return format(value, spec) if value is not None else "n/a"


def _state_lines(states):
    if not states:
        return ["  (none)"]
    out = []
    for st in states:
        diag = ", ".join(f"{st.M[j, j]:.5g}" for j in range(st.M.shape[0])) \
            if st.M is not None else "n/a"
        out.append(f"  kappa={st.kappa:.8f}  E={st.energy:.8f}  "
                   f"diag(M)=[{diag}]")
    return out


# ---------------------------------------------------------------- commands

def cmd_forward(cfg: RunConfig, args, out: str) -> int:
    V = _load_potential(cfg)
    table = reflection_table(V, cfg.sys, _k_grid(cfg))
    states = _bound_states(cfg, V, table)
    extra = {"config_hash": cfg.config_hash}
    ccio.write_reflection_table(os.path.join(out, "reflection.txt"),
                                table, extra)
    if states:
        ccio.write_bound_states(os.path.join(out, "bound_states.txt"),
                                states, cfg.sys, extra)
    print(f"forward: {table.k_grid.size} momenta up to k_max={cfg.k_max}, "
          f"max symmetry residual "
          f"{float(np.max(table.symmetry_residuals)):.3e}")
    print(f"bound states: {len(states)}")
    for line in _state_lines(states):
        print(line)
    print(f"wrote {out}/reflection.txt"
          + (f" and {out}/bound_states.txt" if states else ""))
    return 0


def cmd_invert(cfg: RunConfig, args, out: str) -> int:
    table = ccio.read_reflection_table(args.reflection)
    if table.sys.n_channels != cfg.sys.n_channels:
        raise ConfigError("reflection file channel count does not match config")
    if args.bound is not None:
        states = ccio.read_bound_states(args.bound, cfg.sys)
    elif cfg.bound_mode == "fit":
        states = _bound_states(cfg, None, table)
    elif cfg.bound_mode in ("none", "omit"):
        states = []
    else:
        raise ConfigError("invert has no potential to scan; pass --bound "
                          "or set bound.mode to fit/omit/none")

    h = cfg.h
    X = cfg.kernel_box
    if X is None:
        raise ConfigError("invert needs kernel.box (no potential to derive "
                          "it from)")
    X = h * int(np.ceil(X / h - 1e-9))
    extended = cfg.bound_mode == "omit" or cfg.kernel_x_lo is not None
    x_lo = cfg.kernel_x_lo if cfg.kernel_x_lo is not None else -X
    grid = _working_grid(h * round(x_lo / h), X, h)
    ker = total_kernel(table, states, grid, cfg.window_half_width)
    res = reconstruct(ker, extended=extended)

    extra = {"config_hash": cfg.config_hash}
    ccio.write_potential(os.path.join(out, "potential.txt"),
                         res.potential, extra)
    metrics = [
        f"kernel_symmetry_residual = {ker.symmetry_residual:.6e}",
        f"kernel_compensation_residual = {_fmt_opt(ker.compensation_residual, '.6e')}",
        f"asymmetry = {res.asymmetry:.6e}",
        f"trace_identity_residual = {res.trace_residual:.6e}",
        f"max_condition = {res.max_condition:.6e}",
        f"bound_states = {len(states)}",
    ]
    with open(os.path.join(out, "metrics.txt"), "w") as fh:
        fh.write(f"# config_hash={cfg.config_hash}\n")
        fh.write("\n".join(metrics) + "\n")
    for line in metrics:
        print(line)
    print(f"wrote {out}/potential.txt and {out}/metrics.txt")
    return 0


def cmd_roundtrip(cfg: RunConfig, args, out: str) -> int:
    from .plots import potential_comparison, reflection_magnitude

    V = _load_potential(cfg)
    table = reflection_table(V, cfg.sys, _k_grid(cfg))
    states = _bound_states(cfg, V, table)
    extra = {"config_hash": cfg.config_hash}
    ccio.write_reflection_table(os.path.join(out, "reflection.txt"),
                                table, extra)
    if states:
        ccio.write_bound_states(os.path.join(out, "bound_states.txt"),
                                states, cfg.sys, extra)

    h = cfg.h
    X = _box_half_width(cfg, V)
    extended = cfg.bound_mode == "omit"
    x_lo = cfg.kernel_x_lo if (extended and cfg.kernel_x_lo is not None) else -X
    grid = _working_grid(h * round(x_lo / h), X, h)
    ker = total_kernel(table, states, grid, cfg.window_half_width)
    res = reconstruct(ker, extended=extended)
    ccio.write_potential(os.path.join(out, "potential_reconstructed.txt"),
                         res.potential, extra)

    errs = _compare_elements(V, res.potential)
    tol = cfg.roundtrip_tolerance
    n = cfg.sys.n_channels

    deltas = None
    if not args.no_convergence:
        grid2 = _working_grid(grid[0], X, h / 2)
        ker2 = total_kernel(table, states, grid2, cfg.window_half_width)
        res2 = reconstruct(ker2, extended=extended)
        # fine grid contains the coarse nodes, compare there
        idx = np.searchsorted(np.round(res2.x, 9), np.round(res.x, 9))
        dv = np.abs(res.potential.values - res2.potential.values[idx])
        scale = float(np.max(np.abs(V.values))) or 1.0
        deltas = dv.reshape(dv.shape[0], -1).max(axis=0).reshape(n, n) / scale

    lines = [
        "roundtrip report",
        f"config_hash = {cfg.config_hash}",
        f"momenta = {table.k_grid.size} (k_max = {cfg.k_max})",
        f"working box = [{grid[0]:g}, {grid[-1]:g}], h = {h:g}",
        f"bound states ({cfg.bound_mode}): {len(states)}",
        *_state_lines(states),
        f"kernel symmetry residual = {ker.symmetry_residual:.3e}",
        f"kernel compensation residual = {_fmt_opt(ker.compensation_residual)}",
        f"trace identity residual = {res.trace_residual:.3e}",
        f"max row condition = {res.max_condition:.3e}",
        "",
        f"per-element sup errors (relative, tolerance {tol:g}):",
    ]
    ok = True
    for i in range(n):
        for j in range(i, n):
            passed = errs[i, j] <= tol
            ok &= passed
            lines.append(f"  V{i + 1}{j + 1}  {errs[i, j]:.5f}  "
                         f"{'PASS' if passed else 'FAIL'}")
    if deltas is not None:
        lines.append("")
        lines.append("grid-convergence deltas (h -> h/2, relative):")
        for i in range(n):
            for j in range(i, n):
                lines.append(f"  V{i + 1}{j + 1}  {deltas[i, j]:.5f}")
    lines.append("")
    lines.append(f"overall: {'PASS' if ok else 'FAIL'}")

    with open(os.path.join(out, "report.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    potential_comparison(os.path.join(out, "potential_comparison.png"),
                         V, res.potential)
    reflection_magnitude(os.path.join(out, "reflection_magnitude.png"), table)
    print("\n".join(lines))
    print(f"wrote report and figures to {out}/")
    return 0 if ok else 4


def cmd_susy_partner(cfg: RunConfig, args, out: str) -> int:
    from .plots import potential_comparison, reflection_magnitude

    V = _load_potential(cfg)
    kg = _k_grid(cfg, count=cfg.susy_count)
    table = reflection_table(V, cfg.sys, kg)
    states = compute_bound_states(V, cfg.sys, cfg.kappa_max,
                                  scan_step=cfg.scan_step)
    h = cfg.h
    X = _box_half_width(cfg, V)
    x_lo = h * round(cfg.susy_x_lo / h)
    grid = _working_grid(x_lo, X, h)
    res = partner_via_omission(table, grid)
    extra = {"config_hash": cfg.config_hash}
    ccio.write_potential(os.path.join(out, "partner_potential.txt"),
                         res.potential, extra)

    lines = [
        "susy partner report (bound state omitted from the kernel)",
        f"config_hash = {cfg.config_hash}",
        f"momenta = {kg.size} (k_max = {cfg.k_max})",
        f"working box = [{grid[0]:g}, {grid[-1]:g}], h = {h:g}",
        f"original bound states: {len(states)}",
        *_state_lines(states),
        f"trace identity residual = {res.trace_residual:.3e}",
        f"max row condition = {res.max_condition:.3e}",
    ]

    partner_states = find_bound_states(res.potential, cfg.sys, cfg.kappa_max,
                                       scan_step=cfg.scan_step)
    lines.append(f"partner bound states: {len(partner_states)} (expect 0)")

    dev = _compare_elements(V, res.potential)
    lines.append(f"max deviation from original = {float(dev.max()):.3f} "
                 "(large by construction)")

    # phase equivalence: the omission realizes a two-step transform, so the
    # partner's own reflection must reproduce the input table
    table1 = reflection_table(res.potential, cfg.sys, kg)
    dR = float(np.max(np.abs(table1.R - table.R)))
    lines.append(f"sup |R_partner - R_original| = {dR:.5f} "
                 f"(tolerance {args.rtol:g})")
    ok = (not partner_states) and dR <= args.rtol
    ccio.write_reflection_table(
        os.path.join(out, "partner_reflection.txt"), table1, extra)
    reflection_magnitude(os.path.join(out, "reflection_equivalence.png"),
                         table, table1, labels=("original", "partner"))

    lines.append(f"overall: {'PASS' if ok else 'FAIL'}")
    with open(os.path.join(out, "report.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    potential_comparison(os.path.join(out, "partner_comparison.png"),
                         V, res.potential, labels=("original", "partner"))
    print("\n".join(lines))
    print(f"wrote report and figures to {out}/")
    return 0 if ok else 4


def cmd_fit_bound(cfg: RunConfig, args, out: str) -> int:
    table = ccio.read_reflection_table(args.reflection)
    if table.sys.n_channels != cfg.sys.n_channels:
        raise ConfigError("reflection file channel count does not match config")
    n_b = cfg.n_b
    if n_b < 1:
        raise ConfigError("fit-bound needs bound.n_b >= 1 (or --nb)")
    scat = ScatteringIntegral(table, cfg.window_half_width)
    states = fit_bound_states(scat, cfg.sys, n_b, _fit_region(cfg))
    ccio.write_bound_states(os.path.join(out, "bound_states_fit.txt"),
                            states, cfg.sys,
                            {"config_hash": cfg.config_hash})
    print(f"fitted {len(states)} bound state(s) from reflection data:")
    for line in _state_lines(states):
        print(line)
    print(f"wrote {out}/bound_states_fit.txt")
    return 0


# ---------------------------------------------------------------- plumbing

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ccinv",
        description="coupled-channel scattering: forward solves, Marchenko "
                    "inversion, bound-state fits, SUSY partners")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="run config file")
        sp.add_argument("--h", type=float, default=None,
                        help="override grid.h")
        sp.add_argument("--kmax", type=float, default=None,
                        help="override kgrid.k_max")
        sp.add_argument("--nb", type=int, default=None,
                        help="override bound.n_b")
        sp.add_argument("--out", default=None, help="override output.dir")

    sp = sub.add_parser("forward", help="solve the direct problem, write "
                                        "reflection and bound-state tables")
    common(sp)
    sp.set_defaults(func=cmd_forward)

    sp = sub.add_parser("invert", help="reconstruct a potential from a "
                                       "reflection table")
    common(sp)
    sp.add_argument("--reflection", required=True,
                    help="reflection table file")
    sp.add_argument("--bound", default=None, help="bound-state table file")
    sp.set_defaults(func=cmd_invert)

    sp = sub.add_parser("roundtrip", help="forward, invert, compare; write "
                                          "a report with figures")
    common(sp)
    sp.add_argument("--no-convergence", action="store_true",
                    help="skip the h/2 convergence rerun")
    sp.set_defaults(func=cmd_roundtrip)

    sp = sub.add_parser("susy-partner", help="remove the bound state by "
                                             "kernel omission")
    common(sp)
    sp.add_argument("--rtol", type=float, default=1e-2,
                    help="tolerance on the transformed-reflection match")
    sp.set_defaults(func=cmd_susy_partner)

    sp = sub.add_parser("fit-bound", help="fit bound-state parameters from "
                                          "reflection data alone")
    common(sp)
    sp.add_argument("--reflection", required=True,
                    help="reflection table file")
    sp.set_defaults(func=cmd_fit_bound)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.h is not None:
            cfg.h = args.h
        if args.kmax is not None:
            cfg.k_max = args.kmax
        if args.nb is not None:
            cfg.n_b = args.nb
        out = args.out if args.out is not None else cfg.output_dir
        os.makedirs(out, exist_ok=True)
        return args.func(cfg, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return 2
    except (ToleranceFailure, FitRejectedError) as exc:
        print(f"tolerance failure: {exc}", file=_sys.stderr)
        return 4
    except CcinvError as exc:
        print(f"numerical failure: {exc}", file=_sys.stderr)
        return 3


if __name__ == "__main__":
    _sys.exit(main())
