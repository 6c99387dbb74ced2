"""End-to-end command line runs, in process, on small configurations."""

import numpy as np
import pytest

from ccinv import io as ccio
from ccinv.cli import main

ZERO_CFG = """\
system.n_channels = 1
system.thresholds = 0.0
potential.v11 = zero
grid.x_lo = -2.0
grid.x_hi = 2.0
kgrid.k_max = 6.0
kgrid.count = 200
kernel.box = 1.0
"""

CASE1_CFG = """\
system.n_channels = 2
system.thresholds = 0.0, 0.0
potential.v11 = gaussian V0=0.1 b=4 c=1.8
potential.v22 = multilayer a=0.01 x0=0.5 layers=0.08:2.7,0.05:4.0
potential.v12 = seasaw V0=0.075 xl=1.2 xs=0.75 signs=+,-,-
kgrid.count = 400
kernel.box = 4.5
"""

CASE2_CFG = """\
system.n_channels = 2
system.thresholds = 0.0, 0.025
potential.v11 = gaussian V0=0.15 b=9 c=1.8
potential.v22 = multilayer a=0.05 x0=1.0 layers=0.20:2.8
potential.v12 = gaussian V0=0.12 b=9 c=2.2
kernel.box = 4.5
susy.x_lo = -4.5
susy.count = 300
"""


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_roundtrip_zero_potential(tmp_path):
    cfg = write_cfg(tmp_path, ZERO_CFG)
    out = tmp_path / "out"
    rc = main(["roundtrip", "--config", cfg, "--out", str(out),
               "--no-convergence"])
    assert rc == 0
    report = (out / "report.txt").read_text()
    assert "overall: PASS" in report
    assert "kernel compensation residual = n/a" in report
    assert (out / "potential_comparison.png").stat().st_size > 0
    assert (out / "reflection_magnitude.png").stat().st_size > 0


def test_roundtrip_underresolved_data_fails(tmp_path):
    # k_max = 3 cannot resolve the sharp layer edges: honest tolerance exit
    cfg = write_cfg(tmp_path, CASE1_CFG)
    out = tmp_path / "out"
    rc = main(["roundtrip", "--config", cfg, "--out", str(out),
               "--kmax", "3", "--no-convergence"])
    assert rc == 4
    report = (out / "report.txt").read_text()
    assert "FAIL" in report
    assert "overall: FAIL" in report


def test_forward_writes_parseable_tables(tmp_path):
    cfg = write_cfg(tmp_path, ZERO_CFG)
    out = tmp_path / "out"
    rc = main(["forward", "--config", cfg, "--out", str(out)])
    assert rc == 0
    text = (out / "reflection.txt").read_text()
    assert "config_hash=" in text.splitlines()[1]
    table = ccio.read_reflection_table(out / "reflection.txt")
    assert table.k_grid.size == 200
    assert float(np.max(np.abs(table.R))) < 1e-12
    assert not (out / "bound_states.txt").exists()


def test_invert_from_written_table(tmp_path):
    cfg = write_cfg(tmp_path, ZERO_CFG)
    out = tmp_path / "out"
    main(["forward", "--config", cfg, "--out", str(out)])
    rc = main(["invert", "--config", cfg, "--out", str(out),
               "--reflection", str(out / "reflection.txt")])
    assert rc == 0
    V = ccio.read_potential(out / "potential.txt")
    assert float(np.max(np.abs(V.values))) < 1e-6
    assert "max_condition" in (out / "metrics.txt").read_text()


def test_invert_needs_explicit_bound_source(tmp_path):
    cfg = write_cfg(tmp_path, ZERO_CFG + "bound.mode = forward\n")
    out = tmp_path / "out"
    main(["forward", "--config", write_cfg(tmp_path, ZERO_CFG, "f.cfg"),
          "--out", str(out)])
    rc = main(["invert", "--config", cfg, "--out", str(out),
               "--reflection", str(out / "reflection.txt")])
    assert rc == 2


def test_fit_bound_needs_count(tmp_path):
    cfg = write_cfg(tmp_path, ZERO_CFG)
    out = tmp_path / "out"
    main(["forward", "--config", cfg, "--out", str(out)])
    rc = main(["fit-bound", "--config", cfg, "--out", str(out),
               "--reflection", str(out / "reflection.txt")])
    assert rc == 2


def test_config_errors_exit_2(tmp_path):
    rc = main(["forward", "--config", str(tmp_path / "absent.cfg"),
               "--out", str(tmp_path / "out")])
    assert rc == 2
    bad = write_cfg(tmp_path, ZERO_CFG + "kgrid.kmax = 3\n", "bad.cfg")
    rc = main(["forward", "--config", bad, "--out", str(tmp_path / "out")])
    assert rc == 2


def test_missing_config_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["roundtrip"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_susy_partner_quick(tmp_path):
    # no bound state to remove here, so the partner must simply match the
    # original; at 300 momenta the reconstruction noise needs a loose rtol
    cfg = write_cfg(tmp_path, CASE2_CFG)
    out = tmp_path / "out"
    rc = main(["susy-partner", "--config", cfg, "--out", str(out),
               "--rtol", "0.05"])
    assert rc == 0
    report = (out / "report.txt").read_text()
    assert "partner bound states: 0" in report
    assert "overall: PASS" in report
    for name in ("partner_potential.txt", "partner_reflection.txt",
                 "reflection_equivalence.png", "partner_comparison.png"):
        assert (out / name).exists()
