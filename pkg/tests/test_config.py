# -*- coding: utf-8 -*-

import pytest

from cicstone.core.config import ConfigFile, run_root, sweep_candidates
from cicstone.core.errors import ConfigurationError

from conftest import SMALL_CONFIG, small_config


def test_defaults_fill_missing_keys():
    config = ConfigFile.parse("[env]\nkind = gridworld\n")
    assert config["agent"]["kind"] == "cic"
    assert config["agent"]["temperature"] == 0.5
    assert config["train"]["num_pretrain_steps"] == 50000
    assert config["train"]["sweep_step"] == 0.1


def test_missing_env_kind_is_named():
    with pytest.raises(ConfigurationError, match=r"\[env\] kind"):
        ConfigFile.parse("[train]\nseed = 3\n")


def test_unknown_key_is_named():
    with pytest.raises(ConfigurationError, match=r"\[agent\] learning_rate"):
        ConfigFile.parse("[env]\nkind = pointmass\n[agent]\nlearning_rate = 0.1\n")


def test_unknown_section_reports_line():
    with pytest.raises(ConfigurationError, match=":2:"):
        ConfigFile.parse("[env]\n[optim]\n")


def test_bad_value_type():
    with pytest.raises(ConfigurationError, match="expects a int"):
        ConfigFile.parse("[env]\nkind = pointmass\n[train]\nseed = three\n")


def test_overrides_win_over_file_values():
    config = small_config("train.seed=11", "--agent.variant=similarity")
    assert config["train"]["seed"] == 11
    assert config["agent"]["variant"] == "similarity"


def test_render_round_trip():
    config = small_config("agent.prediction_head=false", "env.dt=0.1")
    echoed = ConfigFile.parse(config.render())
    assert echoed == config
    assert echoed.render() == config.render()


def test_comments_are_ignored():
    config = ConfigFile.parse("[env]\nkind = pointmass   # the point mass\n; note\n")
    assert config["env"]["kind"] == "pointmass"


def test_seed_frames_must_fit_in_finetune_budget():
    with pytest.raises(ConfigurationError, match="seed_frames"):
        small_config("train.seed_frames=100", "train.num_finetune_steps=50")


def test_onehot_observation_needs_diayn():
    with pytest.raises(ConfigurationError, match="onehot"):
        small_config("env.kind=gridworld", "env.observation=onehot")
    assert small_config("env.kind=gridworld", "env.observation=onehot", "agent.kind=diayn")


def test_copy_with_leaves_original_untouched():
    config = small_config()
    changed = config.copy_with("agent.skill_dim=5")
    assert changed["agent"]["skill_dim"] == 5
    assert config["agent"]["skill_dim"] == 2


def test_sweep_candidates():
    assert len(sweep_candidates(0.1)) == 11
    assert sweep_candidates(0.1)[3] == 0.3
    assert sweep_candidates(1.0) == [0.0, 1.0]
    with pytest.raises(ConfigurationError):
        sweep_candidates(0.3)


def test_run_root_reads_environment(monkeypatch):
    monkeypatch.setenv("CIC_RUN_DIR", "/tmp/cic-runs")
    assert run_root() == "/tmp/cic-runs"
    monkeypatch.delenv("CIC_RUN_DIR")
    assert run_root() == "runs"


def test_load_from_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(SMALL_CONFIG)
    assert ConfigFile.load(str(path), ["train.seed=2"])["train"]["seed"] == 2
