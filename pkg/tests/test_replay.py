# -*- coding: utf-8 -*-

import numpy as np
import pytest
from scipy.stats import chisquare

from cicstone.core.errors import ContractError, ReplayNotReady
from cicstone.control.replay import ReplayBuffer, ReplayRecord


def _fill(buffer, episodes, length, failure_at=None):
    """ Push `episodes` episodes of `length` steps; reward of step t is t + 1. """
    for episode in range(episodes):
        for step in range(length):
            buffer.push(ReplayRecord(obs=np.array([float(step)]), action=np.zeros(1), ext_reward=step + 1.0,
                                     next_obs=np.array([step + 1.0]), skill=np.array([float(episode)]),
                                     episode=episode, step=step, failure=failure_at == step))


def test_empty_buffer_is_not_ready(rng):
    buffer = ReplayBuffer(1, 1, 1)
    assert not buffer.is_ready(3)
    with pytest.raises(ReplayNotReady):
        buffer.sample_batch(rng, 4)


def test_short_episodes_have_no_window(rng):
    buffer = ReplayBuffer(1, 1, 1)
    _fill(buffer, episodes=3, length=2)
    assert not buffer.is_ready(3)
    with pytest.raises(ReplayNotReady):
        buffer.sample_batch(rng, 4, n=3)
    assert buffer.is_ready(2)


def test_windows_never_span_episodes():
    buffer = ReplayBuffer(1, 1, 1)
    _fill(buffer, episodes=2, length=5)
    starts, lengths, ended = buffer.windows(3)
    assert starts.tolist() == [0, 1, 2, 5, 6, 7]
    assert lengths.tolist() == [3] * 6
    assert not ended.any()


def test_nstep_reward_and_discount(rng):
    buffer = ReplayBuffer(1, 1, 1)
    _fill(buffer, episodes=1, length=5)
    batch = buffer.sample_batch(rng, 64, n=3, gamma=0.9)
    for row in range(len(batch)):
        t = int(batch.obs[row, 0])
        assert batch.reward[row] == pytest.approx((t + 1) + 0.9 * (t + 2) + 0.81 * (t + 3))
        assert batch.discount[row] == pytest.approx(0.729)
        assert batch.nstep_obs[row, 0] == t + 3
        assert batch.next_obs[row, 0] == t + 1


def test_failure_truncates_window_and_zeroes_discount(rng):
    buffer = ReplayBuffer(1, 1, 1)
    _fill(buffer, episodes=1, length=4, failure_at=3)
    starts, lengths, ended = buffer.windows(3)
    assert starts.tolist() == [0, 1, 2, 3]
    assert lengths.tolist() == [3, 3, 2, 1]
    assert ended.tolist() == [False, True, True, True]
    batch = buffer.sample_batch(rng, 64, n=3, gamma=0.9)
    failed = batch.obs[:, 0] >= 1
    assert np.all(batch.discount[failed] == 0.0)
    assert np.all(batch.nstep_obs[failed, 0] == 4.0)


def test_fifo_eviction():
    buffer = ReplayBuffer(1, 1, 1, capacity=4)
    _fill(buffer, episodes=1, length=6)
    assert len(buffer) == 4
    assert [record.step for record in buffer.records()] == [2, 3, 4, 5]


def test_width_mismatch_is_a_contract_error():
    buffer = ReplayBuffer(2, 1, 1)
    with pytest.raises(ContractError, match="obs"):
        buffer.push(ReplayRecord(obs=np.zeros(3), action=np.zeros(1), ext_reward=0.0, next_obs=np.zeros(2),
                                 skill=np.zeros(1), episode=0, step=0))


def test_sampling_is_deterministic_in_the_rng():
    buffer = ReplayBuffer(1, 1, 1)
    _fill(buffer, episodes=3, length=6)
    first = buffer.sample_batch(np.random.default_rng(5), 16)
    second = buffer.sample_batch(np.random.default_rng(5), 16)
    assert np.array_equal(first.indices, second.indices)
    assert np.array_equal(first.reward, second.reward)


def test_window_starts_are_drawn_uniformly(rng):
    buffer = ReplayBuffer(1, 1, 1)
    _fill(buffer, episodes=1, length=10)
    batch = buffer.sample_batch(rng, 100000, n=3)
    counts = np.bincount(batch.indices, minlength=10)
    # the last two records start no complete window
    assert counts[8:].tolist() == [0, 0]
    assert chisquare(counts[:8]).pvalue > 1e-3


def test_snapshot_restores_records(tmp_path):
    buffer = ReplayBuffer(1, 1, 1)
    _fill(buffer, episodes=2, length=4, failure_at=2)
    path = str(tmp_path / "replay.cick")
    buffer.save_snapshot(path)
    restored = ReplayBuffer.load_snapshot(path, capacity=100)
    assert len(restored) == len(buffer)
    assert restored.windows(3)[0].tolist() == buffer.windows(3)[0].tolist()
    assert [r.failure for r in restored.records()] == [r.failure for r in buffer.records()]
