from pathlib import Path

import pytest

from pgg_abm.config import ConfigError, RunConfig, load_config, parse_config
from pgg_abm.values import PersonalValues

EXAMPLE = Path(__file__).resolve().parents[1] / "configs" / "replicate.yaml"


def test_empty_config_is_default():
    assert parse_config(None) == RunConfig()
    assert parse_config({}) == RunConfig()


def test_example_config_loads():
    cfg = load_config(EXAMPLE)
    assert sum(p.count for p in cfg.replicate.profiles) == 44
    assert cfg.phases.net_cfg.accuracy_threshold == 0.99
    assert cfg.respond.values == PersonalValues(si=0.5, al=0.5)


@pytest.mark.parametrize("data,section", [
    ({"bogus": 1}, "config"),
    ({"scenario": {"endowmnet": 20}}, "scenario"),
    ({"phases": {"network": {"hidden": 3}}}, "phases.network"),
    ({"replicate": {"profiles": [{"label": "free_rider", "count": 4, "extra": 1}]}}, "replicate.profiles[0]"),
])
def test_unknown_keys_name_their_section(data, section):
    with pytest.raises(ConfigError, match=section.replace("[", r"\[").replace("]", r"\]")):
        parse_config(data)


@pytest.mark.parametrize("data,field", [
    ({"scenario": {"group_size": 1}}, "scenario"),
    ({"phases": {"network": {"batch_size": 0}}}, "phases.network"),
    ({"sweep": {"al_values": [0.2, 1.5]}}, "sweep.al_values"),
    ({"threads": 0}, "threads"),
    ({"compare_rl": {"rl_mode": "greedy"}}, "compare_rl.rl_mode"),
    ({"replicate": {"profiles": [{"label": "free_rider", "count": 3}]}}, "replicate.profiles"),
    ({"replicate": {"profiles": [{"label": "mystery", "count": 4}]}}, "replicate.profiles"),
    ({"respond": {"values": {"si": 2}}}, "respond.values"),
])
def test_invalid_values_name_their_field(data, field):
    with pytest.raises(ConfigError, match=field.replace("[", r"\[")):
        parse_config(data)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "nope.yaml")


def test_bad_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("scenario: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(path)
