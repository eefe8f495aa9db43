import json
from pathlib import Path

import numpy as np
import pytest

from hetnetsim.cli import (ExperimentConfig, build_arg_parser, load_config,
                           main, run_experiment)

TINY = """
# fastest possible sweep for plumbing tests
n_u = 12
n_f = 3
M = 24
L = 5
beta = 0.8
policy = none, offload
deployment = uniform
g = 1,2
gamma = 1.0
nf = 3
drops = 2
slots = 3
seed = 42
"""


def _write(tmp_path, text, name="cfg.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_empty_config_gives_defaults(tmp_path):
    cfg = load_config(_write(tmp_path, ""))
    assert cfg.params.n_u == 500
    assert cfg.params.r_mc == 1000.0
    assert cfg.params.d0 == 50.0
    assert cfg.params.alpha == 3.5
    assert cfg.params.w_db == 5.0
    assert cfg.params.beta == 0.8
    assert cfg.params.epsilon1 == 0.1 and cfg.params.epsilon2 == 0.1
    assert cfg.params.gamma == 1.0
    assert cfg.params.r_excl == 100.0
    assert cfg.params.cell_edge_snr_db == 10.0


def test_invalid_beta_field_level_error(tmp_path):
    with pytest.raises(ValueError, match="beta"):
        load_config(_write(tmp_path, "beta = 1.5"))


def test_unknown_key_and_bad_syntax(tmp_path):
    with pytest.raises(ValueError, match="unknown key"):
        load_config(_write(tmp_path, "n_users = 5"))
    with pytest.raises(ValueError, match="expected"):
        load_config(_write(tmp_path, "just a line"))
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "missing.txt")


def test_g_range_syntax(tmp_path):
    cfg = load_config(_write(tmp_path, "g = 2:5"))
    assert cfg.g_list == [2, 3, 4, 5]
    cfg = load_config(_write(tmp_path, "g = 1,5,10"))
    assert cfg.g_list == [1, 5, 10]


def test_sweep_writes_expected_rows(tmp_path):
    cfg = load_config(_write(tmp_path, TINY))
    cfg.out_dir = str(tmp_path / "out")
    assert run_experiment(cfg) == 0
    lines = (Path(cfg.out_dir) / "tradeoff.csv").read_text().strip().splitlines()
    assert len(lines) == 1 + 2 * 2  # header + policies x g values
    header = lines[0].split(",")
    assert header == ["seed", "config_hash", "policy", "deployment", "G",
                      "gamma", "N_f", "macro_total", "sc_total", "ci", "sc_ci"]
    for row in lines[1:]:
        cells = row.split(",")
        assert cells[0] == "42"
        assert cells[1] == cfg.config_hash()
    manifest = json.loads((Path(cfg.out_dir) / "manifest.json").read_text())
    assert manifest["seed"] == 42
    assert manifest["config_hash"] == cfg.config_hash()
    assert manifest["failures"] == []
    # offload rows only for the offload policy
    off = (Path(cfg.out_dir) / "offload.csv").read_text().strip().splitlines()
    assert len(off) == 1 + 2
    assert all(r.split(",")[2] == "offload" for r in off[1:])
    cdf = (Path(cfg.out_dir) / "ratecdf.csv").read_text().strip().splitlines()
    assert len(cdf) == 1 + 4 * 12 * 2  # per point: n_u groups x 2 drops
    kinds = {r.split(",")[7] for r in cdf[1:]}
    assert kinds <= {"macro", "smallcell", "offloaded"}


def test_byte_identical_reruns(tmp_path):
    bodies = []
    for run in range(2):
        cfg = load_config(_write(tmp_path, TINY))
        cfg.out_dir = str(tmp_path / f"out{run}")
        assert run_experiment(cfg) == 0
        bodies.append((Path(cfg.out_dir) / "tradeoff.csv").read_bytes())
    assert bodies[0] == bodies[1]


def test_worker_pool_matches_serial(tmp_path):
    texts = []
    for workers in (1, 2):
        cfg = load_config(_write(tmp_path, TINY))
        cfg.workers = workers
        cfg.out_dir = str(tmp_path / f"w{workers}")
        assert run_experiment(cfg) == 0
        texts.append((Path(cfg.out_dir) / "tradeoff.csv").read_bytes())
    assert texts[0] == texts[1]


def test_dry_run_writes_nothing(tmp_path, capsys):
    cfg_path = _write(tmp_path, TINY + "\nout = " + str(tmp_path / "dry"))
    assert main(["--config", str(cfg_path), "--dry-run"]) == 0
    out = capsys.readouterr().out
    assert json.loads(out)["seed"] == 42
    assert not (tmp_path / "dry").exists()


def test_cli_flag_overrides(tmp_path):
    cfg_path = _write(tmp_path, TINY)
    out = tmp_path / "flags"
    rc = main(["--config", str(cfg_path), "--seed", "7", "--out", str(out),
               "--policy", "none", "--sweep-g", "1:1", "--drops", "1",
               "--slots", "2", "--nf", "2", "--deployment", "edge"])
    assert rc == 0
    lines = (out / "tradeoff.csv").read_text().strip().splitlines()
    assert len(lines) == 2
    cells = lines[1].split(",")
    assert cells[0] == "7" and cells[2] == "none" and cells[3] == "edge"
    assert cells[6] == "2"


def test_bad_cli_values_exit_2(tmp_path):
    assert main(["--config", str(tmp_path / "nope.txt")]) == 2
    cfg_path = _write(tmp_path, "beta = 2.0")
    assert main(["--config", str(cfg_path)]) == 2
    cfg_path2 = _write(tmp_path, "policy = loud", name="c2.txt")
    assert main(["--config", str(cfg_path2)]) == 2


def test_validate_de_flag(tmp_path, capsys):
    cfg_path = _write(tmp_path, """
n_u = 10
n_f = 4
M = 32
L = 8
r_excl = 150
r_mc = 500
g = 2
nf = 4
""")
    assert main(["--config", str(cfg_path), "--validate-de"]) == 0
    out = capsys.readouterr().out
    assert "median rel err" in out
    assert "worst relative error" in out


def test_arg_parser_covers_contract_flags():
    ap = build_arg_parser()
    helptext = ap.format_help()
    for flag in ("--config", "--seed", "--out", "--policy", "--deployment",
                 "--sweep-g", "--gamma", "--nf", "--drops", "--slots",
                 "--dry-run", "--validate-de"):
        assert flag in helptext
