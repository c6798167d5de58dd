import csv
import json

import pytest

from pgg_abm.cli import main

FAST = ["--rounds", "300", "--threshold", "0.95"]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_respond_free_rider_all_zero(tmp_path):
    code = main(["respond", "--si", "1", "--al", "0", "--co", "0", "--fa", "0", "--output-dir", str(tmp_path)])
    assert code == 0
    rows = read_csv(tmp_path / "respond.csv")
    assert rows[0][:2] == ["x", "action"]
    assert len(rows[0]) == 2 + 21
    assert [r[0] for r in rows[1:]] == [str(x) for x in range(21)]
    assert all(r[1] == "0" for r in rows[1:])


def test_sweep_is_byte_identical_and_has_manifest(tmp_path):
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["sweep", "--al-values", "0.4,0.6", "--n-agents", "2", "--seed", "3",
                     "--output-dir", str(out), *FAST]) == 0
        outs.append((out / "sweep.csv").read_bytes())
    assert outs[0] == outs[1]
    assert b"\r" not in outs[0]
    rows = read_csv(tmp_path / "a" / "sweep.csv")
    assert rows[0] == ["al", "x", "mean_action", "std_action", "n_agents"]
    assert len(rows) == 1 + 2 * 21
    manifest = json.loads((tmp_path / "a" / "sweep.manifest.json").read_text())
    assert manifest["master_seed"] == 3
    assert manifest["config"]["phases"]["experience_rounds"] == 300
    assert "version" in manifest and "run" in manifest


def test_compare_rl_schema(tmp_path):
    assert main(["compare-rl", "--output-dir", str(tmp_path), *FAST]) == 0
    rows = read_csv(tmp_path / "compare-rl.csv")
    assert rows[0] == ["mode", "agent_id", "x", "action"]
    assert {r[0] for r in rows[1:]} == {"framework", "oracle"}
    assert len(rows) == 1 + 2 * 4 * 21


def test_replicate_schema(tmp_path):
    cfg = tmp_path / "small.yaml"
    cfg.write_text(
        "replicate:\n  profiles:\n"
        "    - {label: free_rider, count: 4}\n"
        "    - {label: conditional_cooperator, count: 4}\n"
    )
    assert main(["replicate", "--config", str(cfg), "--output-dir", str(tmp_path), *FAST]) == 0
    rows = read_csv(tmp_path / "replicate.csv")
    assert rows[0] == ["profile", "agent_id", "x", "action"]
    assert {r[0] for r in rows[1:]} == {"free_rider", "conditional_cooperator"}


def test_env_var_sets_output_dir_and_flag_wins(tmp_path, monkeypatch):
    env_dir, flag_dir = tmp_path / "env", tmp_path / "flag"
    monkeypatch.setenv("PGG_ABM_OUTPUT_DIR", str(env_dir))
    assert main(["respond", "--oracle"]) == 0
    assert (env_dir / "respond.csv").exists()
    assert main(["respond", "--oracle", "--output-dir", str(flag_dir)]) == 0
    assert (flag_dir / "respond.csv").exists()


def test_flags_override_file(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(f"master_seed: 5\noutput_dir: {tmp_path / 'file'}\n")
    assert main(["respond", "--oracle", "--config", str(cfg), "--seed", "9"]) == 0
    manifest = json.loads((tmp_path / "file" / "respond.manifest.json").read_text())
    assert manifest["master_seed"] == 9


def test_missing_config_exits_2(tmp_path, capsys):
    assert main(["sweep", "--config", str(tmp_path / "missing.yaml")]) == 2
    err = capsys.readouterr().err
    assert "usage:" in err and "not found" in err


def test_unknown_config_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("scenario:\n  enhancment_factor: 1.4\n")
    assert main(["sweep", "--config", str(cfg)]) == 2
    assert "scenario" in capsys.readouterr().err


def test_invalid_flag_value_exits_2(tmp_path, capsys):
    assert main(["respond", "--si", "1.5", "--output-dir", str(tmp_path)]) == 2
    assert "si" in capsys.readouterr().err
    assert main(["sweep", "--threshold", "-1", "--output-dir", str(tmp_path)]) == 2


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["launch"])
    assert info.value.code == 2


def test_runtime_failure_exits_1(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["respond", "--oracle", "--output-dir", str(blocker / "sub")]) == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and "respond failed" in err[0]


def test_selftest_table(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "gradient check" in out and "5/5 checks passed" in out
