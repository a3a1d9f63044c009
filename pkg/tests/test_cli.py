import io
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from bimerton.cli import ConfigError, main, parse_config, run
from bimerton.model import PayoffKind
from bimerton.pricer import Mode

BASIC = """
[model]
case = CaseI
[payoff]
kind = put_on_min
[spot]
X0 = 90
Y0 = 90
[grid]
level = 0
"""

EXPLICIT = """
[model]
sigma_x = 0.2
sigma_y = 0.2
rho = 0.4
r = 0.05
lam = {lam}
mu_jx = -0.1
mu_jy = -0.1
sigma_jx = 0.2
sigma_jy = 0.2
rho_j = 0.3
T = 1.0
[payoff]
kind = put_on_average
strike = 40
[spot]
X0 = 40
Y0 = 40
[grid]
N = 16
J = 16
M = {M}
half_width_x = 1.0
half_width_y = 1.0
"""


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return p


def test_parse_case_defaults():
    cfg = parse_config(BASIC)
    assert cfg.case == "CaseI"
    assert cfg.payoff.kind is PayoffKind.PUT_ON_MIN and cfg.payoff.strike == 100.0
    assert (cfg.N, cfg.J, cfg.M) == (256, 256, 50)
    assert cfg.half_width == (1.5, 1.5)
    assert cfg.mode is Mode.AMERICAN and cfg.epsilon is None


def test_parse_explicit_params():
    cfg = parse_config(EXPLICIT.format(lam=1.0, M=4))
    assert cfg.case is None and cfg.params.lam == 1.0
    g = cfg.grid()
    assert (g.N, g.J, g.M) == (16, 16, 4)


@pytest.mark.parametrize("text,match", [
    (BASIC.replace("case = CaseI", "case = CaseI\nsigma_x = 0.1"), "cannot be combined"),
    (BASIC.replace("kind = put_on_min", "kind = put_on_min\nstrike = -5"), "strike must be > 0"),
    (BASIC + "[run]\nbogus = 1\n", r"line \d+: unknown key 'bogus'"),
    (BASIC + "[extra]\n", "unknown section"),
    (BASIC.replace("level = 0", "level = 0\nN = 64"), "cannot be combined"),
    (BASIC.replace("level = 0", "level = 9"), "level"),
    (BASIC.replace("X0 = 90", "X0 = ninety"), "cannot parse"),
    (BASIC.replace("X0 = 90", "X0 = 90\nX0 = 91"), "duplicate key"),
    (BASIC + "[run]\nepsilon = 0\n", "epsilon must be > 0"),
    (BASIC + "[run]\nmode = bermudan\n", "not one of"),
    (BASIC.replace("case = CaseI", "sigma_x = 0.1"), "missing"),
    ("key = 1\n", "outside any section"),
])
def test_parse_rejects(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_unknown_key_reports_line_number():
    text = "[model]\ncase = CaseI\nwhatever = 3\n"
    with pytest.raises(ConfigError, match="line 3"):
        parse_config(text)


def test_price_command_output(tmp_path, capsys):
    cfg = _write(tmp_path, BASIC)
    assert main(["price", str(cfg)]) == 0
    assert capsys.readouterr().out.strip() == "16.374702"


def test_price_is_deterministic(tmp_path):
    cfg = parse_config(EXPLICIT.format(lam=1.0, M=4))
    outs = []
    for _ in range(2):
        buf = io.StringIO()
        assert run("price", cfg, buf) == 0
        outs.append(buf.getvalue())
    assert outs[0] == outs[1]


def test_price_exports_honour_output_dir(tmp_path, monkeypatch, capsys):
    text = EXPLICIT.format(lam=1.0, M=4) + "[output]\nsurface = s.csv\nmask = m.csv\nkernel = k.csv\n"
    cfg = _write(tmp_path, text)
    out_dir = tmp_path / "out"
    out_dir.mkdir()
    monkeypatch.setenv("BIMERTON_OUTPUT_DIR", str(out_dir))
    assert main(["price", str(cfg)]) == 0
    for name in ("s.csv", "m.csv", "k.csv"):
        assert (out_dir / name).exists()
    assert (out_dir / "k.csv").read_text().startswith("# N=16,J=16,K=")


def test_region_writes_mask(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    text = EXPLICIT.format(lam=1.0, M=4) + "[output]\nmask = m.csv\npgm = m.pgm\n"
    cfg = _write(tmp_path, text)
    assert main(["region", str(cfg)]) == 0
    assert "exercised=" in capsys.readouterr().out
    data = np.loadtxt(tmp_path / "m.csv", delimiter=",", skiprows=1)
    assert data.shape == (15 * 15, 5)
    assert (tmp_path / "m.pgm").read_bytes().startswith(b"P5\n15 15\n255\n")


def test_region_at_maturity_all_exercised(tmp_path, capsys):
    text = EXPLICIT.format(lam=1.0, M=4) + "[run]\nregion_tau = 0\n"
    assert main(["region", str(_write(tmp_path, text))]) == 0
    assert f"exercised={15 * 15}/{15 * 15}" in capsys.readouterr().out


def test_converge_writes_csv(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    text = BASIC + "[run]\nlevels = 0\n[output]\ncsv = conv.csv\n"
    assert main(["converge", str(_write(tmp_path, text))]) == 0
    lines = (tmp_path / "conv.csv").read_text().splitlines()
    assert lines[0] == "level,N,J,M,price,change,ratio,seconds"
    assert float(lines[1].split(",")[4]) == pytest.approx(16.374702, abs=5e-7)


def test_converge_needs_case(tmp_path):
    cfg = parse_config(EXPLICIT.format(lam=1.0, M=4))
    assert run("converge", cfg, io.StringIO()) == 1


def test_config_error_exit_code(tmp_path):
    bad = _write(tmp_path, BASIC.replace("kind = put_on_min", "kind = call"))
    assert main(["price", str(bad)]) == 1


def test_missing_config_is_io_error(tmp_path):
    assert main(["price", str(tmp_path / "nope.ini")]) == 3


def test_unwritable_output_is_io_error(tmp_path):
    text = EXPLICIT.format(lam=1.0, M=4) + f"[output]\nsurface = {tmp_path}/missing/dir/s.csv\n"
    assert main(["price", str(_write(tmp_path, text))]) == 3


def test_truncation_overflow_is_numeric_failure(tmp_path):
    # lam * dtau = 5 with a tiny tolerance needs more than the term cap
    text = EXPLICIT.format(lam=5.0, M=1)
    assert main(["price", str(_write(tmp_path, text)), "--epsilon", "1e-300"]) == 2


def test_flag_overrides(tmp_path, capsys):
    cfg = _write(tmp_path, EXPLICIT.format(lam=1.0, M=4))
    assert main(["price", str(cfg), "--mode", "european", "--embed", "exact"]) == 0
    euro = float(capsys.readouterr().out)
    assert main(["price", str(cfg)]) == 0
    amer = float(capsys.readouterr().out)
    assert amer >= euro
    assert main(["price", str(cfg), "--epsilon", "-1"]) == 1
    assert main(["price", str(cfg), "--level", "7"]) == 1


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path, EXPLICIT.format(lam=1.0, M=4))
    proc = subprocess.run([sys.executable, "-m", "bimerton", "price", str(cfg)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert float(proc.stdout) > 0
