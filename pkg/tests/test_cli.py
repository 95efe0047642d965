import json
import shutil
from pathlib import Path

import pytest

from sparse_harmonics.cli import (
    ConfigError,
    diff_fixture_file,
    fixtures_dir,
    list_fixtures,
    main,
    parse_config,
)

FIX = fixtures_dir()


def write_config(tmp_path, text, name="exp.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


DECAY_CONFIG = """
[experiment]
kind = decay
l = 10
seed = 0

[operator]
kind = hilbert

[symbols]
b = sin

[functions]
bank = bump

[params]
comparator = llogl
t_lo = 0.45
t_hi = 0.68
t_points = 32
"""


# -- config parsing ----------------------------------------------------------

def test_parse_rejects_unknown_key(tmp_path):
    cfg = write_config(tmp_path, "[experiment]\nkind = cf\nbogus = 1\n")
    with pytest.raises(ConfigError, match="bogus"):
        parse_config(cfg)


def test_parse_rejects_unknown_section(tmp_path):
    cfg = write_config(tmp_path, "[experiment]\nkind = cf\n\n[mystery]\nx = 1\n")
    with pytest.raises(ConfigError, match="mystery"):
        parse_config(cfg)


def test_parse_rejects_unknown_kind(tmp_path):
    cfg = write_config(tmp_path, "[experiment]\nkind = frobnicate\n")
    with pytest.raises(ConfigError):
        parse_config(cfg)


def test_parse_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(str(tmp_path / "absent.ini"))


# -- run ---------------------------------------------------------------------

def test_run_decay_writes_artifacts(tmp_path):
    cfg = write_config(tmp_path, DECAY_CONFIG)
    out = tmp_path / "out"
    code = main(["run", cfg, "--out", str(out)])
    assert code == 0
    assert (out / "report.json").is_file()
    assert (out / "curves.csv").is_file()
    assert (out / "plot.svg").is_file()
    payload = json.loads((out / "report.json").read_text())
    assert payload["reports"][0]["verdict"] in ("holds", "holds-with-margin")
    svg = (out / "plot.svg").read_text()
    assert svg.startswith("<svg")
    assert "polyline" in svg


def test_run_config_roundtrip(tmp_path):
    cfg = write_config(tmp_path, DECAY_CONFIG)
    out = tmp_path / "out"
    main(["run", cfg, "--out", str(out)])
    payload = json.loads((out / "report.json").read_text())
    assert payload["config"] == parse_config(cfg)


def test_run_bad_stein_alpha_exits_2(tmp_path):
    cfg = write_config(tmp_path, """
[experiment]
kind = decay
l = 8

[operator]
kind = stein
alpha = 0.3

[functions]
bank = bump
""")
    assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 2


def test_run_stein_decay(tmp_path):
    cfg = write_config(tmp_path, """
[experiment]
kind = decay
l = 8

[operator]
kind = stein
alpha = 1.0

[functions]
bank = bump

[params]
t_lo = 0.01
t_hi = 2
t_points = 24
""")
    out = tmp_path / "o"
    code = main(["run", cfg, "--out", str(out)])
    assert code in (0, 3)
    assert (out / "report.json").is_file()


def test_run_cf_exit_code(tmp_path):
    cfg = write_config(tmp_path, """
[experiment]
kind = cf
l = 8

[operator]
kind = hilbert

[symbols]
b = sin

[functions]
bank = random

[weights]
w = power:0.3333

[params]
p = 1
""")
    assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 0


def test_seed_env_override(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, DECAY_CONFIG)
    out = tmp_path / "o"
    monkeypatch.setenv("SPARSE_HARMONICS_SEED", "77")
    main(["run", cfg, "--out", str(out)])
    payload = json.loads((out / "report.json").read_text())
    assert payload["reports"][0]["env"]["seed"] == 77


# -- constants ---------------------------------------------------------------

def test_constants_matches_fixture_bytes(tmp_path):
    out = tmp_path / "o"
    code = main(["constants", str(FIX / "weight_bank.ini"), "--out", str(out)])
    assert code == 0
    assert (out / "constants.csv").read_bytes() == (FIX / "constants.csv").read_bytes()


# -- fixtures ----------------------------------------------------------------

def test_fixtures_shipped():
    names = list_fixtures()
    for required in ("sharpness.ini", "weight_bank.ini", "report.json",
                     "curves.csv", "constants.csv", "plot.svg"):
        assert required in names


def test_diff_fixtures_missing_exits_2(tmp_path):
    assert main(["diff-fixtures", str(tmp_path)]) == 2


def test_diff_fixtures_identical_copy(tmp_path):
    for name in ("report.json", "curves.csv", "constants.csv"):
        shutil.copy(FIX / name, tmp_path / name)
    assert main(["diff-fixtures", str(tmp_path)]) == 0


def test_diff_fixtures_flags_numeric_change(tmp_path):
    for name in ("report.json", "curves.csv", "constants.csv"):
        shutil.copy(FIX / name, tmp_path / name)
    payload = json.loads((tmp_path / "report.json").read_text())
    payload["reports"][0]["lhs"] = payload["reports"][0]["lhs"] + 0.5
    (tmp_path / "report.json").write_text(json.dumps(payload, sort_keys=True, indent=2))
    assert main(["diff-fixtures", str(tmp_path)]) == 1


def test_diff_tolerates_tiny_numeric_noise(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    a.write_text("t,measure\n1.0,0.5\n")
    b.write_text("t,measure\n1.0,0.50000000000001\n")
    assert diff_fixture_file(a, b) == []


def test_list_fixtures_cli_runs():
    assert main(["list-fixtures"]) == 0
