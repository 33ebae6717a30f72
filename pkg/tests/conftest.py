# -*- coding: utf-8 -*-
""" Shared fixtures and finite-difference helpers. """

import numpy as np
import pytest

from cicstone.core.config import ConfigFile

FD_STEP = 1e-6
FD_TOLERANCE = 1e-5

SMALL_CONFIG = """
[env]
kind = pointmass
task = reach_ne
episode_length = 20

[agent]
kind = cic
hidden_dim = 8
skill_dim = 2
embed_dim = 4
batch_size = 8
knn_k = 3
nstep = 2
ensemble_size = 2
diayn_skills = 3

[train]
seed = 7
num_pretrain_steps = 40
num_finetune_steps = 40
seed_frames = 10
sweep_step = 0.5
sweep_period = 3
replay_capacity = 1000
log_every = 10
eval_episodes = 2

[stats]
resamples = 50
"""


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run the slow acceptance studies")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: multi-seed acceptance study, only run with --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def small_config(*overrides: str) -> ConfigFile:
    return ConfigFile.parse(SMALL_CONFIG, overrides=overrides)


DESK_OVERRIDES = ("agent.hidden_dim=64", "agent.batch_size=64", "agent.embed_dim=16", "agent.skill_dim=8",
                  "agent.knn_k=12", "agent.nstep=3", "agent.lr=0.001", "agent.diayn_skills=4", "env.episode_length=100",
                  "train.num_pretrain_steps=20000", "train.num_finetune_steps=2000", "train.seed_frames=1000",
                  "train.sweep_step=0.1", "train.sweep_period=50", "train.eval_episodes=5", "train.log_every=1000")


def desk_config(*overrides: str) -> ConfigFile:
    """ Desk-scale configuration of the multi-seed acceptance studies. """
    return small_config(*DESK_OVERRIDES, *overrides)


@pytest.fixture
def config():
    return small_config()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def relative_error(analytic, numeric) -> float:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    return float(np.max(np.abs(analytic - numeric) / np.maximum(np.abs(analytic) + np.abs(numeric), 1e-4)))


def numeric_param_grads(params, loss, h: float = FD_STEP) -> list:
    """ Central differences of loss() with respect to every weight and bias of params. """
    grads = []
    for weight, bias in params.layers:
        pair = []
        for array in (weight, bias):
            grad = np.zeros_like(array)
            for index in np.ndindex(array.shape):
                original = array[index]
                array[index] = original + h
                upper = loss()
                array[index] = original - h
                lower = loss()
                array[index] = original
                grad[index] = (upper - lower) / (2.0 * h)
            pair.append(grad)
        grads.append(tuple(pair))
    return grads


def assert_grads_close(analytic: list, numeric: list, tolerance: float = FD_TOLERANCE):
    for (d_weight, d_bias), (n_weight, n_bias) in zip(analytic, numeric):
        assert relative_error(d_weight, n_weight) < tolerance
        assert relative_error(d_bias, n_bias) < tolerance
