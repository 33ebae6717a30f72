# -*- coding: utf-8 -*-
""" Agent Implementation Module.

An agent owns every learned parameter of a run and exposes the small surface the
trainer drives: sample a skill, act, update from a replay batch, list the skills a
grid sweep should try, and export or import its arrays for checkpoints.

Skill-conditioned actor-critic agents share `DdpgAgent`; they only differ in how the
intrinsic reward of a batch is computed and in what, if anything, is learned
alongside the actor-critic.
"""

from abc import ABC, abstractmethod

import numpy as np

from cicstone.core.errors import ConfigurationError
from cicstone.core.rng import RandomStreams
from cicstone.envs.environment import EnvSpec
from cicstone.control.cic import CicNets, cic_update, constant_skill, intrinsic_reward, sample_skill
from cicstone.control.ddpg import DdpgLearner
from cicstone.control.entropy import RewardNormalizer
from cicstone.control.replay import Batch

__all__ = ["AgentABC", "DdpgAgent", "CicAgent"]


class AgentABC(ABC):
    """ Agent Abstract Base Class.

    :param config: Resolved run configuration.
    :param env_spec: Static description of the environment the agent acts in.
    :param streams: Random streams of the run; initialization draws from the 'init' stream.
    """

    kind = None
    """str: Agent kind as named in the [agent] kind key."""

    def __init__(self, config: dict, env_spec: EnvSpec, streams: RandomStreams):
        assert self.kind is not None, \
            "Agent kind has not been defined."
        self.config = config
        self.env_spec = env_spec
        self.obs_dim = env_spec.obs_dim
        self.action_dim = env_spec.action_dim
        self.skill_dim = 0

    @abstractmethod
    def sample_skill(self, rng: np.random.Generator) -> np.ndarray:
        pass

    @abstractmethod
    def act(self, obs, skill, rng: np.random.Generator = None, explore: bool = False) -> np.ndarray:
        pass

    @abstractmethod
    def update(self, batch: Batch, step: int = None) -> dict:
        """ Reward-free update; must never read batch.reward. """
        pass

    @abstractmethod
    def finetune_update(self, batch: Batch, step: int = None) -> dict:
        """ Update against the extrinsic reward stored in the batch. """
        pass

    @abstractmethod
    def sweep_candidates(self, values: list) -> list:
        """ (value, skill) pairs a grid sweep should evaluate. """
        pass

    @abstractmethod
    def arrays(self) -> dict:
        pass

    @abstractmethod
    def load_arrays(self, arrays: dict):
        pass


class DdpgAgent(AgentABC):
    """ Skill-conditioned actor-critic trained on an intrinsic reward.

    Subclasses define `intrinsic_rewards`; `representation_update` is a hook for
    whatever is learned next to the actor-critic.
    """

    def __init__(self, config: dict, env_spec: EnvSpec, streams: RandomStreams, skill_dim: int = 0):
        super(DdpgAgent, self).__init__(config, env_spec, streams)
        agent = config["agent"]
        self.skill_dim = skill_dim
        self.discount = agent["discount"]
        self.learner = DdpgLearner(self.obs_dim, skill_dim, self.action_dim, agent["hidden_dim"],
                                   streams.stream("init", 0), lr=agent["lr"], stddev=agent["stddev"],
                                   stddev_clip=agent["stddev_clip"], critic_tau=agent["critic_tau"])
        self.normalizer = RewardNormalizer() if agent["reward_normalization"] else None

    def sample_skill(self, rng: np.random.Generator) -> np.ndarray:
        return sample_skill(rng, self.skill_dim)

    def act(self, obs, skill, rng: np.random.Generator = None, explore: bool = False) -> np.ndarray:
        return self.learner.act(obs, skill, rng, explore)

    @abstractmethod
    def intrinsic_rewards(self, batch: Batch) -> np.ndarray:
        """ Per-row reward of a batch before normalization. """
        pass

    def representation_update(self, batch: Batch) -> dict:
        return {}

    def update(self, batch: Batch, step: int = None) -> dict:
        metrics = self.representation_update(batch)
        reward = self.intrinsic_rewards(batch)
        metrics["intrinsic_reward"] = float(np.mean(reward))
        if self.normalizer is not None:
            reward = self.normalizer(reward)
        metrics.update(self.learner.update(batch.obs, batch.action, reward, batch.discount, batch.nstep_obs,
                                           batch.skill, step))
        return metrics

    def finetune_update(self, batch: Batch, step: int = None) -> dict:
        return self.learner.update(batch.obs, batch.action, batch.reward, batch.discount, batch.nstep_obs,
                                   batch.skill, step)

    def sweep_candidates(self, values: list) -> list:
        if self.skill_dim == 0:
            return [(0.0, np.zeros(0))]
        return [(value, constant_skill(value, self.skill_dim)) for value in values]

    def arrays(self) -> dict:
        named = self.learner.arrays()
        if self.normalizer is not None:
            named.update(self.normalizer.arrays("reward_normalizer"))
        return named

    def load_arrays(self, arrays: dict):
        self.learner.load_arrays(arrays)
        if self.normalizer is not None:
            self.normalizer.load_arrays(arrays, "reward_normalizer")


class CicAgent(DdpgAgent):
    """ Contrastive Intrinsic Control agent.

    Example:
        agent = CicAgent(config, env.spec, RandomStreams(1))
        skill = agent.sample_skill(rng)
        action = agent.act(obs, skill, rng, explore=True)
    """

    kind = "cic"

    def __init__(self, config: dict, env_spec: EnvSpec, streams: RandomStreams, skill_dim: int = None,
                 cic_loss: bool = None, variant: str = None):
        agent = config["agent"]
        skill_dim = agent["skill_dim"] if skill_dim is None else skill_dim
        super(CicAgent, self).__init__(config, env_spec, streams, skill_dim)
        self.variant = agent["variant"] if variant is None else variant
        self.cic_loss = agent["cic_loss"] if cic_loss is None else cic_loss
        if self.variant != "entropy" and skill_dim == 0:
            raise ConfigurationError("The '{}' reward needs skills; [agent] skill_dim is 0".format(self.variant))
        self.knn_k = agent["knn_k"]
        self.entropy_form = agent["entropy_form"]
        self.lr = agent["lr"]
        ensemble = agent["ensemble_size"] if self.variant == "uncertainty" else 0
        self.nets = CicNets(self.obs_dim, skill_dim, agent["embed_dim"], agent["hidden_dim"],
                            streams.stream("init", 1), temperature=agent["temperature"],
                            prediction_head=agent["prediction_head"], ensemble_size=ensemble)

    def intrinsic_rewards(self, batch: Batch) -> np.ndarray:
        return intrinsic_reward(self.variant, batch, self.nets, self.knn_k, self.entropy_form)

    def representation_update(self, batch: Batch) -> dict:
        if not self.cic_loss or self.skill_dim == 0:
            return {}
        return {"cic_loss": cic_update(self.nets, batch.transitions, batch.skill, self.lr)}

    def arrays(self) -> dict:
        named = super(CicAgent, self).arrays()
        named.update(self.nets.arrays())
        return named

    def load_arrays(self, arrays: dict):
        super(CicAgent, self).load_arrays(arrays)
        self.nets.load_arrays(arrays)
