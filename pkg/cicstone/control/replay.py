# -*- coding: utf-8 -*-
""" Replay Buffer.

A FIFO buffer of skill-tagged transitions. Batches are assembled from n-step windows
that never span two episodes: a window starting at t covers t, ..., t+n-1 of the same
episode, or stops early at a failure (early-termination) state, in which case the
bootstrap discount is zero.
"""

from dataclasses import dataclass

import numpy as np

from cicstone.core.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from cicstone.core.errors import ContractError, ReplayNotReady

__all__ = ["ReplayRecord", "Batch", "ReplayBuffer"]


@dataclass
class ReplayRecord:
    obs: np.ndarray
    action: np.ndarray
    ext_reward: float
    next_obs: np.ndarray
    skill: np.ndarray
    episode: int
    step: int
    failure: bool = False


@dataclass
class Batch:
    """ A training batch.

    `next_obs` is s' of the first transition (so (obs, next_obs) is the transition
    tau), `nstep_obs` is the state reached after the window and `reward` the
    discounted extrinsic return over the window.
    """

    obs: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    discount: np.ndarray
    next_obs: np.ndarray
    nstep_obs: np.ndarray
    skill: np.ndarray
    indices: np.ndarray

    def __len__(self) -> int:
        return self.obs.shape[0]

    @property
    def transitions(self) -> np.ndarray:
        return np.concatenate([self.obs, self.next_obs], axis=1)


class ReplayBuffer:
    """ Replay Buffer class.

    :param obs_dim: Observation width.
    :param action_dim: Action width.
    :param skill_dim: Skill width (may be zero).
    :param capacity: Maximum number of stored records.
    """

    def __init__(self, obs_dim: int, action_dim: int, skill_dim: int, capacity: int = 100000):
        if capacity < 1:
            raise ContractError("Replay capacity must be at least 1, got {}".format(capacity))
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.skill_dim = skill_dim
        self.capacity = capacity
        self._obs = np.zeros((capacity, obs_dim))
        self._action = np.zeros((capacity, action_dim))
        self._reward = np.zeros(capacity)
        self._next_obs = np.zeros((capacity, obs_dim))
        self._skill = np.zeros((capacity, skill_dim))
        self._episode = np.zeros(capacity, dtype=np.int64)
        self._step = np.zeros(capacity, dtype=np.int64)
        self._failure = np.zeros(capacity, dtype=bool)
        self._next = 0
        self.size = 0
        self.pushed = 0
        self._windows = {}

    def __len__(self) -> int:
        return self.size

    def push(self, record: ReplayRecord):
        """ Append a record, evicting the oldest one when the buffer is full. """
        widths = (("obs", record.obs, self.obs_dim), ("action", record.action, self.action_dim),
                  ("next_obs", record.next_obs, self.obs_dim), ("skill", record.skill, self.skill_dim))
        for name, value, width in widths:
            if np.size(value) != width:
                raise ContractError("Record field '{}' has width {} but {} was expected".format(
                    name, np.size(value), width))
        slot = self._next
        self._obs[slot] = np.reshape(record.obs, -1)
        self._action[slot] = np.reshape(record.action, -1)
        self._reward[slot] = record.ext_reward
        self._next_obs[slot] = np.reshape(record.next_obs, -1)
        self._skill[slot] = np.reshape(record.skill, -1)
        self._episode[slot] = record.episode
        self._step[slot] = record.step
        self._failure[slot] = record.failure
        self._next = (slot + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.pushed += 1
        self._windows = {}

    def chronological_slots(self) -> np.ndarray:
        if self.size < self.capacity:
            return np.arange(self.size)
        return (self._next + np.arange(self.capacity)) % self.capacity

    def windows(self, n: int) -> tuple:
        """ Valid window starts for n-step returns.

        :param n: Window length.
        :return: Tuple of (start positions in chronological order, window lengths, failure-ended flags).
        """
        if n < 1:
            raise ContractError("n-step length must be at least 1, got {}".format(n))
        if n in self._windows:
            return self._windows[n]
        slots = self.chronological_slots()
        episode, step, failure = self._episode[slots], self._step[slots], self._failure[slots]
        positions = np.arange(self.size)
        valid = np.ones(self.size, dtype=bool)
        ended = np.zeros(self.size, dtype=bool)
        length = np.zeros(self.size, dtype=np.int64)
        for offset in range(n):
            index = np.minimum(positions + offset, max(self.size - 1, 0))
            same = (positions + offset < self.size) & (episode[index] == episode) & (step[index] == step + offset)
            active = ~ended
            valid &= ~active | same
            length[active & same] = offset + 1
            ended |= active & same & failure[index]
        starts = positions[valid]
        self._windows[n] = (starts, length[valid], ended[valid])
        return self._windows[n]

    def is_ready(self, n: int = 3) -> bool:
        return self.size > 0 and len(self.windows(n)[0]) > 0

    def sample_batch(self, rng: np.random.Generator, batch_size: int, n: int = 3, gamma: float = 0.99) -> Batch:
        """ Sample n-step windows uniformly with replacement.

        :param rng: Source of randomness; the batch is a deterministic function of its state.
        :param batch_size: Number of windows.
        :param n: Window length.
        :param gamma: Discount factor.
        :return: The batch.
        """
        if self.size == 0:
            raise ReplayNotReady("Replay buffer is empty")
        starts, lengths, ended = self.windows(n)
        if not len(starts):
            raise ReplayNotReady("Replay buffer holds no complete {}-step window".format(n))
        choice = rng.integers(0, len(starts), size=batch_size)
        slots = self.chronological_slots()
        position, length = starts[choice], lengths[choice]
        reward = np.zeros(batch_size)
        for offset in range(n):
            inside = offset < length
            index = slots[np.minimum(position + offset, self.size - 1)]
            reward += (gamma ** offset) * np.where(inside, self._reward[index], 0.0)
        first = slots[position]
        last = slots[position + length - 1]
        discount = np.where(ended[choice], 0.0, gamma ** length.astype(np.float64))
        return Batch(obs=self._obs[first].copy(), action=self._action[first].copy(), reward=reward,
                     discount=discount, next_obs=self._next_obs[first].copy(),
                     nstep_obs=self._next_obs[last].copy(), skill=self._skill[first].copy(), indices=first)

    def records(self) -> list:
        """ Stored records in chronological order. """
        return [ReplayRecord(obs=self._obs[slot].copy(), action=self._action[slot].copy(),
                             ext_reward=float(self._reward[slot]), next_obs=self._next_obs[slot].copy(),
                             skill=self._skill[slot].copy(), episode=int(self._episode[slot]),
                             step=int(self._step[slot]), failure=bool(self._failure[slot]))
                for slot in self.chronological_slots()]

    def arrays(self) -> dict:
        slots = self.chronological_slots()
        return {
            "replay.obs": self._obs[slots],
            "replay.action": self._action[slots],
            "replay.reward": self._reward[slots],
            "replay.next_obs": self._next_obs[slots],
            "replay.skill": self._skill[slots],
            "replay.episode": self._episode[slots].astype(np.float64),
            "replay.step": self._step[slots].astype(np.float64),
            "replay.failure": self._failure[slots].astype(np.float64),
        }

    def save_snapshot(self, path: str, config_text: str = ""):
        metadata = {"agent": "", "env": "", "task": "", "phase": "replay", "step": self.pushed, "skill": None,
                    "init_scheme": "", "version": ""}
        return save_checkpoint(path, Checkpoint(config_text, metadata, self.arrays()))

    @classmethod
    def load_snapshot(cls, path: str, capacity: int = None):
        arrays = load_checkpoint(path).arrays
        obs, action, skill = arrays["replay.obs"], arrays["replay.action"], arrays["replay.skill"]
        buffer = cls(obs.shape[1], action.shape[1], skill.shape[1], capacity or max(obs.shape[0], 1))
        for index in range(obs.shape[0]):
            buffer.push(ReplayRecord(obs=obs[index], action=action[index], ext_reward=arrays["replay.reward"][index],
                                     next_obs=arrays["replay.next_obs"][index], skill=skill[index],
                                     episode=int(arrays["replay.episode"][index]),
                                     step=int(arrays["replay.step"][index]),
                                     failure=bool(arrays["replay.failure"][index])))
        return buffer
