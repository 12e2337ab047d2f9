import json
import subprocess
import sys

import pytest
import yaml

from darklattice import cli
from darklattice.config import config_hash, resolve, validate
from darklattice.errors import InvalidInputError
from darklattice.outputs import read_csv

SMALL = ["--nx", "7", "--ny", "7", "--t-end", "3"]


def _run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def _write(tmp_path, cfg, name="run.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg))
    return str(p)


@pytest.mark.parametrize("command", cli.RUNNERS)
def test_dry_run_every_subcommand(command, tmp_path, capsys):
    code, out, _ = _run([command, "--dry-run", "--output-dir", str(tmp_path)], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["config"]["experiment"] == command
    assert doc["config_hash"] == config_hash(doc["config"])
    assert not any(tmp_path.iterdir())  # nothing computed, nothing written


def test_negative_dt_diagnostic(capsys):
    code, _, err = _run(["retrieve", "--dt", "-1", "--dry-run"], capsys)
    assert code == 2
    rec = json.loads(err)
    assert rec["exit_code"] == 2 and "dynamics.dt must be positive" in rec["message"]


def test_validate_names_offending_keys(tmp_path, capsys):
    cfg = {"experiment": "retrieve", "dynamics": {"dt": -0.1},
           "pattern": {"kind": "checkerboard", "params": [[1.0, 0.3]]}}
    code, out, _ = _run(["validate", "--config", _write(tmp_path, cfg)], capsys)
    diags = json.loads(out)["diagnostics"]
    assert code == 2
    assert "dynamics.dt must be positive" in diags
    assert any(d.startswith("pattern.params[0]") and "realness" in d for d in diags)


def test_conjugate_pairing_violation_is_a_realness_diagnostic():
    cfg = resolve("store", {"pattern": {"kind": "components", "period": [4, 1],
                                        "components": [{"q": [1, 0], "amplitude": [0.5, 0.2]},
                                                       {"q": [3, 0], "amplitude": [0.4, 0.0]}]}})
    diags = validate(cfg)
    assert any("realness" in d for d in diags)
    paired = resolve("store", {"pattern": {"kind": "components", "period": [4, 1],
                                           "components": [{"q": [1, 0], "amplitude": [0.5, 0.2]},
                                                          {"q": [3, 0], "amplitude": [0.5, -0.2]}]}})
    assert validate(paired) == []


def test_validate_accepts_good_file(tmp_path, capsys):
    code, out, _ = _run(["validate", "--config", _write(tmp_path, {"experiment": "bands"})], capsys)
    assert code == 0 and json.loads(out) == {"valid": True, "diagnostics": []}


def test_validate_empty_list_iff_run_passes(tmp_path):
    good = resolve("retrieve", overrides={"output.dir": str(tmp_path)})
    assert validate(good) == []
    bad = resolve("retrieve", overrides={"lattice.nx": 0})
    diags = validate(bad)
    assert diags and all(d.startswith("lattice.nx") for d in diags)


def test_missing_block_is_reported():
    cfg = resolve("retrieve")
    del cfg["mode"]
    assert any(d.startswith("mode") for d in validate(cfg))


def test_unreadable_config_exit_2(tmp_path, capsys):
    code, _, err = _run(["bands", "--config", str(tmp_path / "missing.yaml")], capsys)
    assert code == 2 and json.loads(err)["status"] == "error"


def test_instability_exit_3(tmp_path, capsys):
    # d = 0.02 puts the fastest collective decay far beyond 2.8 / dt
    code, _, err = _run(["retrieve", *SMALL, "--spacing", "0.02", "--output-dir", str(tmp_path)], capsys)
    assert code == 3
    assert json.loads(err)["error"] == "InstabilityError"


def test_infeasible_target_exit_4(tmp_path, capsys):
    code, _, err = _run(["shape", "--total", "1.5", "--output-dir", str(tmp_path)], capsys)
    assert code == 4
    assert json.loads(err)["error"] == "InfeasibleTargetError"


def test_flags_override_file(tmp_path, capsys):
    path = _write(tmp_path, {"lattice": {"nx": 9, "spacing": 0.25}, "dynamics": {"dt": 0.005}})
    code, out, _ = _run(["retrieve", "--config", path, "--nx", "11", "--dry-run"], capsys)
    cfg = json.loads(out)["config"]
    assert code == 0
    assert cfg["lattice"]["nx"] == 11 and cfg["lattice"]["spacing"] == 0.25 and cfg["dynamics"]["dt"] == 0.005


def test_outputs_carry_the_config_hash(tmp_path, capsys):
    code, out, _ = _run(["bands", "--samples", "5", "--output-dir", str(tmp_path)], capsys)
    res = json.loads(out)
    assert code == 0
    h, header, rows = read_csv(res["csv"])
    assert h == res["config_hash"]
    assert header[0] == "k_path_fraction" and rows
    summary = json.loads(open(res["json"]).read())
    assert summary["config_hash"] == h
    raw = open(res["csv"], "rb").read()
    assert raw.startswith(b"# config-hash: ") and b"\r\n" in raw


def test_parallel_sweep_is_byte_identical(tmp_path, capsys, monkeypatch):
    argv = ["retrieve", *SMALL, "--waist-sweep", "2:4:1"]
    blobs = []
    for threads in ("1", "3"):
        monkeypatch.setenv("DARKLATTICE_THREADS", threads)
        out_dir = tmp_path / threads
        code, out, _ = _run([*argv, "--output-dir", str(out_dir)], capsys)
        assert code == 0
        blobs.append(open(json.loads(out)["csv"], "rb").read())
    assert blobs[0] == blobs[1]
    _, header, rows = read_csv(tmp_path / "1" / next(p.name for p in (tmp_path / "1").glob("*.csv")))
    assert header[0] == "mode.waist" and [float(r[0]) for r in rows] == [2.0, 3.0, 4.0]


def test_bad_thread_count(monkeypatch):
    monkeypatch.setenv("DARKLATTICE_THREADS", "0")
    with pytest.raises(InvalidInputError):
        cli.pool_size()


def test_parse_range():
    assert cli.parse_range("2:10:0.5")[-1] == 10.0 and len(cli.parse_range("2:10:0.5")) == 17
    assert cli.parse_range("1,2.5") == [1.0, 2.5]


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "darklattice.cli", "disperse", "--dry-run"],
                          capture_output=True, text=True, cwd=tmp_path)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["config"]["experiment"] == "disperse"
