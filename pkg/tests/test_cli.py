import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgs import __version__
from sgs.cli import main, render_csv
from sgs.experiments import (
    EXPERIMENTS,
    ConfigError,
    format_value,
    literal,
    load_config,
    parse_system,
)

SSR = "[experiment]\nname = ssr\n[params]\nM = 8, 16\n"
CS_SMALL = """
[experiment]
name = cs-recover
[params]
levels = 16, 128
counts = 16, 32
K = 64
sparsity_levels = 4, 16, 64
sparsity = 2, 3, 2
uniform = false
[run]
seed = 5
seeds = 3
"""


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for name in EXPERIMENTS:
        assert f"{name} → " in out
    assert "required: M" in out


def test_usage_errors(tmp_path, capsys):
    cfg = write(tmp_path, SSR)
    assert main(["nope", "--config", str(cfg)]) == 2
    assert main(["ssr"]) == 2
    assert main(["ssr", "--config", str(tmp_path / "missing.ini")]) == 2
    assert main(["ssr", "--config", str(cfg), "--seed", "-1"]) == 2
    assert main(["ssr", "--config", str(cfg), "--jobs", "0"]) == 2
    assert main(["gs", "--config", str(cfg)]) == 2
    bad = write(tmp_path, "[experiment]\nname = ssr\n[params]\nM = 8\ncolour = red\n", "bad.ini")
    assert main(["ssr", "--config", str(bad)]) == 2
    assert "colour" in capsys.readouterr().err


def test_module_failure_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "[experiment]\nname = ssr\n[params]\nM = 32\ntheta = 1.01\nn_max = 40\n")
    assert main(["ssr", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "BoundExhaustedError" in capsys.readouterr().err


def test_artifacts(tmp_path):
    cfg = write(tmp_path, SSR)
    out = tmp_path / "out"
    assert main(["ssr", "--config", str(cfg), "--out", str(out), "--seed", "17"]) == 0
    lines = (out / "ssr.csv").read_text().splitlines()
    assert lines[0] == "M,theta,N,d_nm"
    assert [literal(v) for v in lines[1].split(",")[:3]] == [8, 2.0, 15]
    meta = json.loads((out / "ssr.meta.json").read_text())
    assert meta["seed"] == 17 and meta["rows"] == 2 and meta["version"] == __version__
    assert meta["config_sha256"] == load_config(SSR).digest
    assert meta["columns"] == ["M", "theta", "N", "d_nm"]


@pytest.mark.parametrize(
    "name, text",
    [
        ("ssr", SSR),
        ("cs-recover", CS_SMALL),
        ("theorem-check", "[params]\nlevels = 8, 64\ncounts = 8, 20\nsparsity_levels = 8, 64\nsparsity = 2, 2\n"),
        ("coherence", "[params]\nN = 8, 16\nprobe_depth = 2\n"),
    ],
)
def test_rerun_byte_identical(tmp_path, name, text):
    cfg = write(tmp_path, text)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main([name, "--config", str(cfg), "--out", str(a)]) == 0
    assert main([name, "--config", str(cfg), "--out", str(b)]) == 0
    for suffix in (".csv", ".meta.json"):
        assert (a / f"{name}{suffix}").read_bytes() == (b / f"{name}{suffix}").read_bytes()


def test_jobs_do_not_change_output(tmp_path):
    cfg = write(tmp_path, CS_SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["cs-recover", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["cs-recover", "--config", str(cfg), "--out", str(b), "--jobs", "2"]) == 0
    assert (a / "cs-recover.csv").read_bytes() == (b / "cs-recover.csv").read_bytes()
    rows = (a / "cs-recover.csv").read_text().splitlines()[1:]
    assert [r.split(",")[0] for r in rows] == ["5", "6", "7"]


def test_seed_changes_ensemble(tmp_path):
    cfg = write(tmp_path, CS_SMALL)
    assert main(["cs-recover", "--config", str(cfg), "--out", str(tmp_path / "a"), "--seed", "100"]) == 0
    rows = (tmp_path / "a" / "cs-recover.csv").read_text().splitlines()[1:]
    assert rows[0].startswith("100,multilevel,")


def test_console_module_entry():
    res = subprocess.run([sys.executable, "-m", "sgs.cli", "list"], capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "cs-flip" in res.stdout


# config parsing -----------------------------------------------------------


@pytest.mark.parametrize(
    "text, msg",
    [
        ("[params]\nM = 4\n[extra]\nx = 1\n", "unknown config sections"),
        ("[params]\ntheta = 2\n", "requires parameter 'M'"),
        ("[params]\nM = 4\ntheta = 0.5\n", "theta must exceed 1"),
        ("[params]\nM = four\n", "integer"),
        ("[experiment]\nname = gs\n[params]\nM = 4\n", "not 'ssr'"),
        ("[params]\nM = 4\n[run]\nseeds = 0\n", "seeds must be positive"),
        ("[params\nM = 4\n", "malformed"),
    ],
)
def test_config_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        load_config(text, "ssr")


def test_config_ranges_and_systems():
    cfg = load_config("[systems]\nreconstruction = daubechies(2, 0, 1)\n[params]\nN = 5..8\n", "consistent-fail")
    assert cfg.params["N"] == [5, 6, 7, 8]
    assert cfg.reconstruction.describe() == parse_system("daubechies(2, 0, 1)").describe()
    with pytest.raises(ConfigError):
        parse_system("chebyshev(0, 1)")
    with pytest.raises(ConfigError):
        load_config("[params]\nlevels = 16, 8\ncounts = 4, 4\n", "cs-flip")
    with pytest.raises(ConfigError):
        load_config("[params]\nM = 4\n", "ssr", seed=2**64)


def test_render_csv_format():
    text = render_csv(["a", "b", "c"], [{"a": 1, "b": 0.1, "c": True}, {"a": np.int64(2), "b": np.inf, "c": "x"}])
    assert text == "a,b,c\n1,0.1,1\n2,inf,x\n"


@settings(max_examples=50, deadline=None)
@given(st.floats(allow_nan=False))
def test_float_roundtrip(v):
    assert literal(format_value(v)) == v
