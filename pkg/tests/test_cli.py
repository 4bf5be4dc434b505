import numpy as np
import pytest

from artifact.cli import (EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_QUADRATURE, EXIT_VERIFY,
                          SCAN_COLUMNS, ConfigError, RunConfig, build_config,
                          cmd_coeffs, cmd_grid, cmd_scan, main, parse_config)
from artifact.besselt import Params
from artifact.coeffs import QuadratureSpec, coefficient_table


def _read_grid(text):
    rows = [line.split() for line in text.splitlines()
            if line.strip() and not line.startswith("#")]
    return np.array(rows, dtype=float)


def _read_csv(text):
    lines = [line for line in text.splitlines() if line and not line.startswith("#")]
    header = lines[0].split(",")
    return header, [dict(zip(header, line.split(","))) for line in lines[1:]]


# --- configuration ------------------------------------------------------------

def test_parse_config():
    vals = parse_config("# comment\nmass = 2.0\neps=0.05  # trailing\n\n"
                        "coefficients=C0, Ct_PS\nverbose=yes\n")
    assert vals == {"mass": 2.0, "eps": 0.05, "coefficients": ("C0", "Ct_PS"),
                    "verbose": True}
    cfg = build_config(vals)
    assert cfg.params == Params(2.0, 0.05)


@pytest.mark.parametrize("text", ["bogus=1", "mass", "mass=abc", "grid_n=1.5",
                                  "verbose=maybe", "eps_list=0.1,x", "tol=nan"])
def test_parse_config_rejects(text):
    with pytest.raises(ConfigError):
        parse_config(text)


@pytest.mark.parametrize("vals", [{"mass": -1.0}, {"eps": 0.0}, {"tol": 1.0},
                                  {"L": 1.0}, {"grid_n": 0}, {"t_min": 2.0, "t_max": 1.0},
                                  {"coefficients": ("C7",)}, {"eps_list": (0.1, -0.1)},
                                  {"fault_inject": "nope"}])
def test_build_config_rejects(vals):
    with pytest.raises(ConfigError):
        build_config(vals)


# --- grid --------------------------------------------------------------------

def test_default_grid():
    text, status = cmd_grid(RunConfig())
    assert status == EXIT_OK
    blocks = [b for b in text.split("\n\n")]
    assert len(blocks) == 50
    data = _read_grid(text)
    assert data.shape == (2500, 3)
    peak = data[np.argmax(data[:, 2])]
    # the mesh has no node at the origin; the peak sits at the nearest nodes
    step = 6 * 0.1 / 49
    assert abs(peak[0]) <= step and abs(peak[1]) <= step


def test_single_point_grid():
    text, _ = cmd_grid(RunConfig(grid_n=1))
    data = _read_grid(text)
    assert data.shape == (1, 3)
    assert data[0, 0] == 0 and data[0, 1] == 0
    # |T^(-1)(0,0)|^2 -> 1/(4 pi^6 eps^8) for small m eps
    assert data[0, 2] == pytest.approx(1 / (4 * np.pi ** 6 * 0.1 ** 8), rel=0.02)


def test_grid_deterministic(tmp_path):
    a, b = tmp_path / "a.dat", tmp_path / "b.dat"
    assert main(["grid", "--out", str(a)]) == EXIT_OK
    assert main(["grid", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


# --- coefficients ------------------------------------------------------------

def test_coeffs_csv():
    cfg = RunConfig(params=Params(1.0, 0.1))
    text, status = cmd_coeffs(cfg)
    assert status == EXIT_OK
    assert "# m=1" in text and "# rel_tol=1e-08" in text
    header, rows = _read_csv(text)
    assert header == ["name", "value", "error_estimate"]
    names = [r["name"] for r in rows]
    assert names[-1] == "alpha" and len(names) == 10
    table = coefficient_table(Params(1.0, 0.1))
    for r in rows[:-1]:
        assert float(r["value"]) == table.value(r["name"])
    assert float(rows[-1]["value"]) == pytest.approx(192 * np.pi ** 2, rel=1e-8)


def test_coeffs_tolerances_agree():
    loose = cmd_coeffs(RunConfig(quad=QuadratureSpec(rel_tol=1e-6)))[0]
    strict = cmd_coeffs(RunConfig(quad=QuadratureSpec(rel_tol=1e-9)))[0]
    for a, b in zip(_read_csv(loose)[1][:-1], _read_csv(strict)[1][:-1]):
        diff = abs(float(a["value"]) - float(b["value"]))
        assert diff <= float(a["error_estimate"]) + float(b["error_estimate"])


def test_coeffs_empty_selection(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("coefficients=\n")
    out = tmp_path / "c.csv"
    assert main(["coeffs", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    header, rows = _read_csv(out.read_text())
    assert header == ["name", "value", "error_estimate"] and rows == []


def test_coeffs_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["coeffs", "--out", str(a)]) == EXIT_OK
    assert main(["coeffs", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_quadrature_failure_exit(tmp_path):
    cfg = tmp_path / "q.cfg"
    cfg.write_text("max_subdivisions=16\n")
    assert main(["coeffs", "--config", str(cfg)]) == EXIT_QUADRATURE


def test_alpha_command(capsys):
    assert main(["alpha", "--c", "0.001"]) == EXIT_OK
    _, rows = _read_csv(capsys.readouterr().out)
    vals = {r["quantity"]: r["value"] for r in rows}
    assert float(vals["alpha"]) == pytest.approx(float(vals["alpha_closed_form"]), rel=1e-10)
    assert float(vals["alpha"]) < 0


# --- scan ---------------------------------------------------------------------

def test_scan():
    cfg = RunConfig(eps_list=(0.1, 0.03, 0.01))
    text, _ = cmd_scan(cfg)
    header, rows = _read_csv(text)
    assert tuple(header) == SCAN_COLUMNS
    alphas = np.array([float(r["alpha"]) for r in rows])
    assert np.abs(alphas / alphas[0] - 1).max() <= 1e-6
    eps = np.array([float(r["eps"]) for r in rows])
    peak = np.array([float(r["peak"]) for r in rows])
    assert abs(np.polyfit(np.log(eps), np.log(peak), 1)[0] + 8) <= 0.05


def test_single_eps_scan_matches_coeffs():
    scan = _read_csv(cmd_scan(RunConfig(eps_list=(0.1,)))[0])[1][0]
    coeffs = _read_csv(cmd_coeffs(RunConfig())[0])[1]
    for r in coeffs[:-1]:
        assert scan[r["name"]] == r["value"]


# --- verify --------------------------------------------------------------------

def test_verify_passes(capsys):
    assert main(["verify", "--verbose"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert "residual" in out
    assert "suite,check,residual,tolerance,status" in out


def test_verify_fault_injection(tmp_path, capsys):
    out = tmp_path / "v.csv"
    assert main(["verify", "--fault-inject", "fa_sign", "--out", str(out)]) == EXIT_VERIFY
    assert "FAIL [parity]" in capsys.readouterr().out
    assert ",FAIL" in out.read_text()


# --- exit codes -------------------------------------------------------------------

def test_config_error_exit(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour=blue\n")
    assert main(["grid", "--config", str(cfg)]) == EXIT_CONFIG
    assert main(["grid", "--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG
    assert main(["grid", "--eps", "-1"]) == EXIT_CONFIG


def test_unwritable_output(tmp_path):
    assert main(["grid", "--grid-n", "2", "--out", str(tmp_path / "no" / "x.dat")]) == EXIT_IO


def test_exit_codes_distinct():
    assert len({EXIT_OK, EXIT_CONFIG, EXIT_QUADRATURE, EXIT_VERIFY, EXIT_IO}) == 5
