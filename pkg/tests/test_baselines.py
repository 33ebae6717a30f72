# -*- coding: utf-8 -*-

import numpy as np
import pytest

from cicstone.core.errors import ContractError
from cicstone.core.rng import RandomStreams
from cicstone.envs import make_environment
from cicstone.envs.gridworld import encode_cell
from cicstone.control import build_agent
from cicstone.control.agents import CicAgent
from cicstone.control.baselines import (AptAgent, DiaynAgent, DiaynHead, FixedAgent, TabularDiaynAgent,
                                        diayn_loss_and_grads, diayn_reward, diayn_update, one_hot)
from cicstone.control.entropy import particle_entropy_reward
from cicstone.control.replay import Batch

from conftest import assert_grads_close, numeric_param_grads, small_config


def _head_with_logits(logits) -> DiaynHead:
    head = DiaynHead(2, len(logits), 3, np.random.default_rng(0))
    for weight, bias in head.params.layers:
        weight[...] = 0.0
        bias[...] = 0.0
    head.params.layers[-1][1][...] = logits
    return head


def _batch(rng, obs_dim, skill, action_dim=2, reward=None):
    size = skill.shape[0]
    obs = rng.normal(size=(size, obs_dim))
    return Batch(obs=obs, action=rng.uniform(-1, 1, size=(size, action_dim)),
                 reward=np.zeros(size) if reward is None else reward, discount=np.full(size, 0.9),
                 next_obs=obs + 0.05, nstep_obs=obs + 0.1, skill=skill, indices=np.arange(size))


def test_hand_computed_diayn_reward():
    head = _head_with_logits([2.0, 0.0, 0.0, 0.0])
    expected = np.log(np.exp(2.0) / (np.exp(2.0) + 3.0)) + np.log(4.0)
    assert diayn_reward(head, [0.3, -0.1], 0, 4) == pytest.approx(expected)
    assert diayn_reward(head, [0.3, -0.1], 0, 4) == pytest.approx(1.0483, abs=1e-4)


def test_uniform_head_gives_zero_reward():
    head = _head_with_logits([0.0, 0.0, 0.0])
    assert all(diayn_reward(head, [1.0, 2.0], z) == pytest.approx(0.0, abs=1e-12) for z in range(3))


def test_confident_head_approaches_log_k():
    head = _head_with_logits([60.0, 0.0, 0.0, 0.0])
    reward = diayn_reward(head, [0.0, 0.0], 0)
    assert reward <= np.log(4.0)
    assert reward == pytest.approx(np.log(4.0), abs=1e-12)


def test_skill_index_out_of_range():
    head = _head_with_logits([0.0, 0.0])
    with pytest.raises(ContractError, match="out of range"):
        diayn_reward(head, [0.0, 0.0], 2)
    with pytest.raises(ContractError):
        diayn_reward(head, [0.0, 0.0], 0, num_skills=3)
    with pytest.raises(ContractError):
        DiaynHead(2, 1, 3, np.random.default_rng(0))


def test_cross_entropy_gradients_match_finite_differences(rng):
    head = DiaynHead(3, 4, 5, rng)
    states, labels = rng.normal(size=(7, 3)), rng.integers(0, 4, size=7)
    _, grads = diayn_loss_and_grads(head, states, labels)

    def loss():
        return diayn_loss_and_grads(head, states, labels)[0]

    assert_grads_close(grads, numeric_param_grads(head.params, loss))


def test_separable_labels_lower_the_loss(rng):
    head = DiaynHead(2, 2, 8, rng)
    states = np.concatenate([rng.normal(-2.0, 0.3, size=(16, 2)), rng.normal(2.0, 0.3, size=(16, 2))])
    labels = np.repeat([0, 1], 16)
    losses = [diayn_update(head, states, labels, lr=1e-2) for _ in range(100)]
    assert losses[-1] < losses[0]


def test_one_class_batch_converges_to_that_class(rng):
    head = DiaynHead(2, 3, 8, rng)
    states = rng.normal(size=(16, 2))
    for _ in range(300):
        diayn_update(head, states, np.full(16, 2), lr=1e-2)
    assert np.all(head.probabilities(states)[:, 2] > 0.9)


def test_empty_batch_is_rejected(rng):
    with pytest.raises(ContractError):
        diayn_loss_and_grads(DiaynHead(2, 2, 3, rng), np.zeros((0, 2)), [])


def test_apt_agent_has_no_skills(config):
    env = make_environment(config["env"])
    agent = build_agent(small_config("agent.kind=apt"), env.spec, RandomStreams(3))
    assert isinstance(agent, AptAgent)
    assert agent.skill_dim == 0
    assert agent.learner.actor.in_dim == env.spec.obs_dim
    assert list(agent.nets.named_nets()) == ["key_net"]
    assert agent.sweep_candidates([0.0, 0.5, 1.0])[0][1].shape == (0,)


def test_apt_rewards_are_the_entropy_of_frozen_embeddings(config, rng):
    env = make_environment(config["env"])
    agent = AptAgent(config, env.spec, RandomStreams(3))
    batch = _batch(rng, env.spec.obs_dim, np.zeros((8, 0)))
    expected = particle_entropy_reward(agent.nets.embed_transitions(batch.transitions), k=3)
    assert np.array_equal(agent.intrinsic_rewards(batch), expected)
    before = agent.nets.key_net.copy()
    agent.update(batch, step=1)
    assert np.array_equal(before.layers[0][0], agent.nets.key_net.layers[0][0])


def test_apt_matches_skill_free_cic(config, rng):
    env = make_environment(config["env"])
    apt = AptAgent(config, env.spec, RandomStreams(3))
    cic = CicAgent(config, env.spec, RandomStreams(3), skill_dim=0, cic_loss=False, variant="entropy")
    batch = _batch(rng, env.spec.obs_dim, np.zeros((8, 0)))
    assert np.array_equal(apt.intrinsic_rewards(batch), cic.intrinsic_rewards(batch))


def test_fixed_agent_reward_is_one(config, rng):
    env = make_environment(config["env"])
    agent = build_agent(small_config("agent.kind=fixed"), env.spec, RandomStreams(3))
    assert isinstance(agent, FixedAgent)
    batch = _batch(rng, env.spec.obs_dim, np.zeros((8, 0)))
    assert np.array_equal(agent.intrinsic_rewards(batch), np.ones(8))
    metrics = agent.update(batch, step=1)
    assert metrics["intrinsic_reward"] == 1.0


def test_continuous_diayn_agent(rng):
    config = small_config("agent.kind=diayn")
    env = make_environment(config["env"])
    agent = build_agent(config, env.spec, RandomStreams(3))
    assert isinstance(agent, DiaynAgent)
    skill = agent.sample_skill(rng)
    assert skill.sum() == 1.0 and skill.shape == (3,)
    candidates = agent.sweep_candidates([0.0, 1.0])
    assert [value for value, _ in candidates] == [0.0, 1.0, 2.0]
    batch = _batch(rng, env.spec.obs_dim, np.array([one_hot(i % 3, 3) for i in range(8)]))
    assert np.all(agent.intrinsic_rewards(batch) <= np.log(3.0))
    assert "diayn_loss" in agent.update(batch, step=1)


def _tabular_agent():
    config = small_config("env.kind=gridworld", "env.observation=onehot", "agent.kind=diayn")
    env = make_environment(config["env"])
    return build_agent(config, env.spec, RandomStreams(3)), env


def test_tabular_diayn_is_built_for_onehot_grids():
    agent, env = _tabular_agent()
    assert isinstance(agent, TabularDiaynAgent)
    assert agent.q_table.shape == (3, 100, 4)
    action = agent.act(env.reset(0), one_hot(1, 3))
    assert sorted(np.abs(action).tolist()) == [0.0, 1.0]


def test_tabular_update_moves_by_the_mean_error():
    agent, _ = _tabular_agent()
    state = encode_cell((2, 3), 10, "onehot")
    obs = np.array([state, state])
    right = np.array([[1.0, 0.0], [1.0, 0.0]])
    batch = Batch(obs=obs, action=right, reward=np.array([1.0, 3.0]), discount=np.zeros(2), next_obs=obs,
                  nstep_obs=obs, skill=np.array([one_hot(0, 3), one_hot(0, 3)]), indices=np.arange(2))
    agent.finetune_update(batch)
    index = int(np.argmax(state))
    assert agent.q_table[0, index, 3] == pytest.approx(0.1 * 2.0)
    assert np.count_nonzero(agent.q_table) == 1


def test_tabular_greedy_action_follows_the_table():
    agent, env = _tabular_agent()
    obs = env.reset(0)
    agent.q_table[2, int(np.argmax(obs)), 0] = 5.0
    assert agent.act(obs, one_hot(2, 3)).tolist() == [0.0, 1.0]


def test_tabular_arrays_round_trip():
    agent, _ = _tabular_agent()
    agent.q_table[1, 5, 2] = 4.0
    other, _ = _tabular_agent()
    other.load_arrays(agent.arrays())
    assert other.q_table[1, 5, 2] == 4.0
