import hashlib
import json
import math
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from cavityhall import __version__
from cavityhall.cli import (
    BANDS_HEADER,
    BUTTERFLY_HEADER,
    EVOLVE_HEADER,
    GAPS_HEADER,
    fmt,
    main,
)
from cavityhall.config import ConfigError, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _rows(path):
    lines = Path(path).read_text().splitlines()
    return lines[0], [line.split(",") for line in lines[1:]]


# -- configuration ---------------------------------------------------------

def test_parse_flux_and_defaults(caplog):
    with caplog.at_level("INFO"):
        cfg = parse_config("[model]\nflux = 2/5\n", mode="edges")
    assert cfg.params.flux == Fraction(2, 5)
    assert cfg.params.theta == 0
    assert "model.theta not set" in caplog.text
    assert cfg.mode == "edges"


def test_parse_reduces_flux_with_warning(caplog):
    with caplog.at_level("WARNING"):
        cfg = parse_config("[run]\nmode = butterfly\n[model]\nflux = 4/10\n")
    assert cfg.params.flux == Fraction(2, 5)
    assert "reduced" in caplog.text


@pytest.mark.parametrize(
    "text, key, line",
    [
        ("[run]\nmode = evolve\n[model]\nkappa = -1\n", "model.kappa", 4),
        ("[run]\nmode = evolve\n[model]\n\nfoo = 3\n", "model.foo", 5),
        ("[run]\nmode = evolve\n[model]\nflux = 1/0\n", "model.flux", 4),
        ("[run]\nmode = evolve\n[model]\nflux = 0.12345\n", "model.flux", 4),
        ("[run]\nmode = evolve\n[dynamics]\nh = fast\n", "dynamics.h", 4),
        ("[run]\nmode = evolve\n[dynamics]\nstepper = leapfrog\n", "dynamics.stepper", 4),
        ("[run]\nmode = evolve\n[model]\nlambda = -2\n", "model.lambda", 4),
        ("[run]\nmode = dance\n", "run.mode", 2),
    ],
)
def test_parse_errors_name_key_and_line(text, key, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == key
    assert info.value.line == line
    assert key in str(info.value) and f"line {line}" in str(info.value)


def test_missing_mode_and_unknown_section():
    with pytest.raises(ConfigError) as info:
        parse_config("[model]\nlambda = 1\n")
    assert info.value.key == "run.mode"
    with pytest.raises(ConfigError) as info:
        parse_config("[run]\nmode = evolve\n[extras]\nx = 1\n")
    assert info.value.line == 3
    with pytest.raises(ConfigError):
        parse_config("lambda = 1\n", mode="evolve")


def test_overrides():
    cfg = parse_config("[model]\nlambda = 1\n", mode="evolve",
                       overrides=["lambda=0", "dynamics.alpha0=1+0j", "occupied=0,0; 3,3"])
    assert cfg.params.lam == 0
    assert cfg.dynamics.initial.alpha0 == 1
    assert cfg.dynamics.initial.occupied == ((0, 0), (3, 3))
    with pytest.raises(ConfigError):
        parse_config("", mode="evolve", overrides=["nosuch=1"])
    with pytest.raises(ConfigError):
        parse_config("", mode="evolve", overrides=["lambda"])


def test_resolved_dict_is_json():
    cfg = parse_config("[model]\nflux = 2/5\n", mode="evolve")
    doc = json.loads(json.dumps(cfg.as_dict()))
    assert doc["model"]["flux"] == "2/5"
    assert doc["dynamics"]["alpha0"] == {"re": 0.0, "im": 0.0}


def test_fmt():
    assert fmt(0.1) == "0.1"
    assert fmt(-0.0) == "0"
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(12345678901234.0) == "1.23456789012e+13"


# -- butterfly -------------------------------------------------------------

def test_butterfly_csv(tmp_path):
    cfg = _write(tmp_path, "[run]\nmode = butterfly\n[grids]\nq_max = 2\nn_kx = 4\nn_nu = 4\n")
    out = tmp_path / "b.csv"
    assert main(["butterfly", "--config", cfg, "--out", str(out)]) == 0
    header, rows = _rows(out)
    assert header == BUTTERFLY_HEADER
    assert {(r[0], r[1]) for r in rows} == {("0", "1"), ("1", "2")}
    half = [float(r[2]) for r in rows if r[1] == "2"]
    assert max(abs(e) for e in half) <= 2 * math.sqrt(2) + 1e-9
    keys = [(Fraction(int(r[0]), int(r[1])), float(r[2])) for r in rows]
    assert keys == sorted(keys)
    side = json.loads(out.with_suffix(".json").read_text())
    assert side["version"] == __version__
    assert side["config"]["grids"]["q_max"] == 2


def test_butterfly_is_byte_deterministic(tmp_path):
    cfg = _write(tmp_path, "[run]\nmode = butterfly\n[grids]\nq_max = 5\nn_kx = 6\nn_nu = 6\n")
    digests = []
    for name in ("a.csv", "b.csv"):
        assert main(["butterfly", "--config", cfg, "--out", str(tmp_path / name)]) == 0
        digests.append(hashlib.sha256((tmp_path / name).read_bytes()).hexdigest())
        digests.append(hashlib.sha256((tmp_path / name).with_suffix(".json").read_bytes()).hexdigest())
    assert digests[0] == digests[2] and digests[1] == digests[3]


# -- edges -----------------------------------------------------------------

EDGES = "[run]\nmode = edges\n[model]\nflux = {flux}\nlambda = {lam}\n[grids]\nn_kx = 200\nn_nu = 200\nl_open = 50\nn_ky = 200\n"


def test_edges_two_fifths(tmp_path):
    cfg = _write(tmp_path, EDGES.format(flux="2/5", lam=1))
    assert main(["edges", "--config", cfg, "--out", str(tmp_path / "e.csv")]) == 0
    header, rows = _rows(tmp_path / "e_gaps.csv")
    assert header == GAPS_HEADER
    assert len(rows) == 4
    assert sorted(int(r[2]) for r in rows) == [-2, -1, 1, 2]
    for r in rows:
        assert int(r[2]) == int(r[4]) - int(r[3])
    bheader, brows = _rows(tmp_path / "e_bands.csv")
    assert bheader == BANDS_HEADER
    assert len(brows) == 200 * 50
    assert (tmp_path / "e.json").exists()


def test_edges_zero_flux_has_no_gaps(tmp_path):
    cfg = _write(tmp_path, EDGES.format(flux="0", lam=1))
    assert main(["edges", "--config", cfg, "--out", str(tmp_path / "z.csv")]) == 0
    header, rows = _rows(tmp_path / "z_gaps.csv")
    assert header == GAPS_HEADER and rows == []


def test_edges_lambda_twice_omega(tmp_path):
    cfg = _write(tmp_path, EDGES.format(flux="2/5", lam=2))
    code = main(["edges", "--config", cfg, "--out", str(tmp_path / "l.csv")])
    _, rows = _rows(tmp_path / "l_gaps.csv")
    gammas = [int(r[2]) for r in rows if r[2]]
    assert code == 0
    assert len(rows) == 2, f"gap rows {rows}"
    assert all(abs(g) == 1 for g in gammas)


def test_edges_ambiguous_exit_code(tmp_path):
    cfg = _write(tmp_path, EDGES.format(flux="2/5", lam=1) + "")
    code = main(["edges", "--config", cfg, "--out", str(tmp_path / "a.csv"), "--override", "n_ky=6"])
    assert code == 4
    _, rows = _rows(tmp_path / "a_gaps.csv")
    assert len(rows) == 4
    assert any(r[2] == "" for r in rows)
    side = json.loads((tmp_path / "a.json").read_text())
    assert side["ambiguous_gaps"]


# -- evolve ----------------------------------------------------------------

def test_evolve_closed_form_population(tmp_path):
    cfg = _write(tmp_path, "[run]\nmode = evolve\n[model]\nlambda = 0\nomega = 0\ndelta = 0.5\n"
                 "[dynamics]\nt_max = 3\nh = 0.01\nsample_every = 25\n")
    out = tmp_path / "ev.csv"
    assert main(["evolve", "--config", cfg, "--out", str(out), "--override", "alpha0=1"]) == 0
    header, rows = _rows(out)
    assert header == EVOLVE_HEADER
    t = np.array([float(r[0]) for r in rows])
    pop = np.array([float(r[3]) for r in rows])
    assert len(rows) == 13
    assert np.abs(pop - np.exp(-2 * t)).max() < 1e-6


def test_evolve_abort_marker(tmp_path):
    cfg = _write(tmp_path, "[run]\nmode = evolve\n[model]\nlambda = 5\nomega = 5\n"
                 "[dynamics]\nt_max = 50\nh = 0.5\nstepper = euler\nsample_every = 1\n")
    out = tmp_path / "ab.csv"
    assert main(["evolve", "--config", cfg, "--out", str(out)]) == 3
    lines = out.read_text().splitlines()
    assert lines[0] == EVOLVE_HEADER
    assert lines[-1].startswith("#ABORT,")
    assert len(lines) > 2
    assert "abort" in json.loads(out.with_suffix(".json").read_text())


def test_evolve_is_deterministic(tmp_path):
    cfg = _write(tmp_path, "[run]\nmode = evolve\n[model]\nlambda = 0.5\nomega = 0.5\ndelta = 0.5\n"
                 "flux = 1/2\n[dynamics]\nt_max = 2\nsample_every = 20\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["evolve", "--config", cfg, "--out", str(a)]) == 0
    assert main(["evolve", "--config", cfg, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


REFERENCE_EVOLVE = (
    "[run]\nmode = evolve\n[model]\nlambda = 0.5\nomega = 0.5\ndelta = 0.5\nflux = {flux}\n"
    "[dynamics]\nt_max = {t_max}\nh = 0.01\nsample_every = 10\n"
)


@pytest.mark.slow
def test_evolve_zero_flux_population_decays(tmp_path):
    cfg = _write(tmp_path, REFERENCE_EVOLVE.format(flux="0", t_max=300))
    assert main(["evolve", "--config", cfg, "--out", str(tmp_path / "z.csv")]) == 0
    _, rows = _rows(tmp_path / "z.csv")
    pop = np.array([float(r[3]) for r in rows])
    assert pop[-1] < 0.01 * pop.max(), f"final {pop[-1]:.4g}, max {pop.max():.4g}"


@pytest.mark.slow
def test_evolve_half_flux_plateau(tmp_path):
    cfg = _write(tmp_path, REFERENCE_EVOLVE.format(flux="1/2", t_max=300))
    assert main(["evolve", "--config", cfg, "--out", str(tmp_path / "h.csv")]) == 0
    _, rows = _rows(tmp_path / "h.csv")
    t = np.array([float(r[0]) for r in rows])
    pop = np.array([float(r[3]) for r in rows])[t >= 0.8 * t[-1]]
    assert (pop.max() - pop.min()) / pop.mean() < 0.01


def test_config_errors_exit_2(tmp_path):
    cfg = _write(tmp_path, "[model]\nkappa = -1\n")
    assert main(["evolve", "--config", cfg]) == 2
    assert main(["evolve", "--config", str(tmp_path / "missing.ini")]) == 2


def test_unwritable_output(tmp_path):
    cfg = _write(tmp_path, "[grids]\nq_max = 1\nn_kx = 2\nn_nu = 2\n")
    assert main(["butterfly", "--config", cfg, "--out", str(tmp_path / "no" / "dir" / "x.csv")]) == 1


def test_shipped_configs_parse():
    for path in CONFIGS.glob("*.ini"):
        cfg = parse_config(path.read_text())
        assert cfg.mode in ("butterfly", "edges", "evolve")


def test_console_script(tmp_path):
    cfg = _write(tmp_path, "[grids]\nq_max = 1\nn_kx = 2\nn_nu = 2\n")
    out = tmp_path / "s.csv"
    res = subprocess.run([sys.executable, "-m", "cavityhall.cli", "butterfly", "--config", cfg,
                          "--out", str(out)], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert out.read_text().startswith(BUTTERFLY_HEADER)
