"""Run configuration: flat `section.key = value` text files.

Example:

    system.n_channels = 2
    system.thresholds = 0.0, 0.025
    potential.v11 = gaussian V0=0.15 b=9 c=1.8
    potential.v22 = multilayer a=0.05 x0=1.0 layers=0.20:2.8
    potential.v12 = gaussian V0=0.12 b=9 c=2.2
    grid.x_lo = -6.0
    grid.x_hi = 6.0
    grid.h = 0.05
    kgrid.k_max = 12.0
    kgrid.count = 1200
    bound.mode = forward
    kernel.box = 4.5

Profile values use a one-line mini grammar: `gaussian V0=.. b=.. c=..`,
`multilayer a=.. x0=.. layers=V:x,V:x`, `seasaw V0=.. xl=.. xs=..
signs=+,-,-`, or `zero`.  A tabulated potential replaces element specs
via `potential.file = path`.  Unknown keys are rejected so typos fail
loudly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .channels import ChannelSystem
from .errors import ConfigError
from .profiles import (GaussianProfile, MultilayerProfile, SeaSawProfile,
                       ZeroProfile)

__all__ = ["RunConfig", "load_config", "parse_profile"]

_KNOWN_KEYS = {
    "system.n_channels", "system.thresholds",
    "potential.file",
    "grid.x_lo", "grid.x_hi", "grid.h",
    "kgrid.k_max", "kgrid.count", "kgrid.window_points", "kgrid.low_k_points",
    "bound.mode", "bound.n_b", "bound.kappa_max", "bound.scan_step",
    "fit.s_lo", "fit.s_hi", "fit.n_samples",
    "kernel.box", "kernel.x_lo", "kernel.window_half_width",
    "susy.x_lo", "susy.count",
    "roundtrip.tolerance",
    "output.dir",
}
_BOUND_MODES = ("none", "forward", "fit", "omit", "file")


def parse_profile(text: str):
    """One profile spec from its mini-grammar line."""
    parts = text.split()
    if not parts:
        raise ConfigError("empty profile spec")
    kind, args = parts[0].lower(), {}
    for tok in parts[1:]:
        if "=" not in tok:
            raise ConfigError(f"malformed profile token {tok!r}")
        key, _, val = tok.partition("=")
        args[key] = val
    try:
        if kind == "zero":
            return ZeroProfile()
        if kind == "gaussian":
            return GaussianProfile(float(args["V0"]), float(args["b"]),
                                   float(args["c"]))
        if kind == "multilayer":
            layers = tuple(
                (float(v), float(x))
                for v, x in (pair.split(":") for pair in args["layers"].split(",")))
            return MultilayerProfile(float(args["a"]), float(args["x0"]), layers)
        if kind == "seasaw":
            signs = tuple(1 if s.strip() in ("+", "+1") else -1
                          for s in args["signs"].split(","))
            return SeaSawProfile(float(args["V0"]), float(args["xl"]),
                                 float(args["xs"]), signs)
    except (KeyError, ValueError, IndexError) as exc:
        raise ConfigError(f"bad profile spec {text!r}: {exc}") from exc
    raise ConfigError(f"unknown profile kind {kind!r}")


@dataclass
class RunConfig:
    """Validated run parameters with solver defaults filled in."""

    sys: ChannelSystem
    element_specs: dict = None         # {(i, j): spec}, i <= j, 0-based
    potential_file: str = None
    x_lo: float = -6.0
    x_hi: float = 6.0
    h: float = 0.05
    k_max: float = 12.0
    count: int = 1200
    window_points: int = 48
    low_k_points: int = 0
    bound_mode: str = "none"
    n_b: int = 0
    kappa_max: float = 0.9
    scan_step: float = 1e-3
    fit_s_lo: float = None             # default depends on the kernel box
    fit_s_hi: float = -0.2
    fit_n_samples: int = 80
    kernel_box: float = None           # half-width X; default support-derived
    kernel_x_lo: float = None          # extended-path left edge
    window_half_width: float = 0.05
    susy_x_lo: float = -32.0
    susy_count: int = 4800
    roundtrip_tolerance: float = 0.03
    output_dir: str = "out"
    config_hash: str = field(default="", compare=False)


def _parse_lines(text: str) -> dict:
    raw = {}
    for ln, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {ln}: expected key = value")
        key, _, val = stripped.partition("=")
        key = key.strip()
        base = key
        if base.startswith("potential.v") and base[11:].isdigit():
            base = "potential.v*"
        elif base not in _KNOWN_KEYS:
            raise ConfigError(f"line {ln}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {ln}: duplicate key {key!r}")
        raw[key] = val.strip()
    return raw


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    raw = _parse_lines(text)

    try:
        n = int(raw.pop("system.n_channels"))
        thresholds = tuple(float(t)
                           for t in raw.pop("system.thresholds").split(","))
    except KeyError as exc:
        raise ConfigError(f"missing required key {exc.args[0]}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad system section: {exc}") from exc
    try:
        sys = ChannelSystem(n, thresholds)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    specs = {}
    for key in [k for k in raw if k.startswith("potential.v")]:
        digits = key[len("potential.v"):]
        if len(digits) != 2 or not digits.isdigit():
            raise ConfigError(f"potential element key {key!r} must be "
                              "potential.v<i><j>")
        i, j = int(digits[0]) - 1, int(digits[1]) - 1
        if not (0 <= i <= j < n):
            raise ConfigError(f"{key!r}: indices outside 1..{n} upper triangle")
        specs[(i, j)] = parse_profile(raw.pop(key))

    cfg = RunConfig(sys=sys, element_specs=specs or None,
                    config_hash=hashlib.sha256(text.encode()).hexdigest()[:16])

    def take(key, cast, attr):
        if key in raw:
            try:
                setattr(cfg, attr, cast(raw.pop(key)))
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from exc

    take("potential.file", str, "potential_file")
    take("grid.x_lo", float, "x_lo")
    take("grid.x_hi", float, "x_hi")
    take("grid.h", float, "h")
    take("kgrid.k_max", float, "k_max")
    take("kgrid.count", int, "count")
    take("kgrid.window_points", int, "window_points")
    take("kgrid.low_k_points", int, "low_k_points")
    take("bound.mode", str, "bound_mode")
    take("bound.n_b", int, "n_b")
    take("bound.kappa_max", float, "kappa_max")
    take("bound.scan_step", float, "scan_step")
    take("fit.s_lo", float, "fit_s_lo")
    take("fit.s_hi", float, "fit_s_hi")
    take("fit.n_samples", int, "fit_n_samples")
    take("kernel.box", float, "kernel_box")
    take("kernel.x_lo", float, "kernel_x_lo")
    take("kernel.window_half_width", float, "window_half_width")
    take("susy.x_lo", float, "susy_x_lo")
    take("susy.count", int, "susy_count")
    take("roundtrip.tolerance", float, "roundtrip_tolerance")
    take("output.dir", str, "output_dir")
    if raw:
        raise ConfigError(f"unused keys: {sorted(raw)}")

    if cfg.element_specs is None and cfg.potential_file is None:
        raise ConfigError("config defines no potential (element specs or "
                          "potential.file)")
    if cfg.bound_mode not in _BOUND_MODES:
        raise ConfigError(f"bound.mode must be one of {_BOUND_MODES}")
    if cfg.h <= 0 or cfg.k_max <= 0 or cfg.count < 2:
        raise ConfigError("grid.h, kgrid.k_max, kgrid.count out of range")
    if cfg.x_hi <= cfg.x_lo:
        raise ConfigError("grid.x_hi must exceed grid.x_lo")
    return cfg
