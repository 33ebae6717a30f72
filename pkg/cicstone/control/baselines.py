# -*- coding: utf-8 -*-
""" Baseline Agents.

- DIAYN: discrete skills z in {0, ..., K-1} with a uniform prior and a classifier
  q(z|s) over visited states; the reward is log q(z|s) - log(1/K). On continuous
  environments the skill is appended to the observation as a one-hot vector and the
  actor-critic is trained as usual; on a one-hot gridworld the policy is a Q table.
- APT: the CIC agent without skills and without the contrastive loss, so the
  particle entropy of frozen random transition embeddings is the whole reward.
- Fixed: a constant reward of 1 per step and nothing else learned, for measuring
  how much an agent is rewarded for merely staying alive.
"""

import numpy as np
from scipy.special import log_softmax, softmax

from cicstone.core.errors import ContractError
from cicstone.core.nn import AdamState, MlpParams, adam_step, as_batch, mlp_backward, mlp_forward
from cicstone.core.rng import RandomStreams
from cicstone.envs.environment import EnvSpec
from cicstone.envs.gridworld import MOVES, discretize_action
from cicstone.control.agents import AgentABC, CicAgent, DdpgAgent
from cicstone.control.replay import Batch

__all__ = ["DiaynHead", "diayn_reward", "diayn_rewards", "diayn_loss_and_grads", "diayn_update", "DiaynAgent",
           "TabularDiaynAgent", "AptAgent", "FixedAgent", "apt_agent", "diayn_agent", "one_hot"]


def one_hot(index: int, size: int) -> np.ndarray:
    vector = np.zeros(size)
    vector[index] = 1.0
    return vector


class DiaynHead:
    """ Skill classifier with one hidden layer: state -> K logits.

    :param in_dim: State width.
    :param num_skills: Number of discrete skills K >= 2.
    :param hidden_dim: Hidden width.
    :param rng: Initialization randomness.
    """

    def __init__(self, in_dim: int, num_skills: int, hidden_dim: int, rng: np.random.Generator):
        if num_skills < 2:
            raise ContractError("DIAYN needs at least 2 skills, got {}".format(num_skills))
        self.num_skills = num_skills
        self.params = MlpParams.initialize([in_dim, hidden_dim, num_skills], rng)
        self.optimizer = AdamState(self.params)

    def probabilities(self, states) -> np.ndarray:
        return softmax(self.params(states), axis=1)

    def arrays(self, prefix: str = "diayn") -> dict:
        named = self.params.arrays(prefix + ".head")
        named.update(self.optimizer.arrays(prefix + ".head.adam"))
        return named

    def load_arrays(self, arrays: dict, prefix: str = "diayn"):
        self.params.load_arrays(arrays, prefix + ".head")
        self.optimizer.load_arrays(arrays, prefix + ".head.adam")


def _check_labels(labels, num_skills: int) -> np.ndarray:
    labels = np.asarray(labels).reshape(-1).astype(np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= num_skills):
        raise ContractError("Skill index out of range [0, {})".format(num_skills))
    return labels


def diayn_rewards(head, states, labels) -> np.ndarray:
    """ log q(z|s) + log K for a batch of states and skill indices. """
    params = head.params if isinstance(head, DiaynHead) else head
    num_skills = params.out_dim
    labels = _check_labels(labels, num_skills)
    log_q = log_softmax(params(as_batch(states)), axis=1)
    return log_q[np.arange(labels.shape[0]), labels] + np.log(num_skills)


def diayn_reward(head, state, z: int, num_skills: int = None) -> float:
    """ Prior-baselined DIAYN reward of one state; bounded above by log K. """
    params = head.params if isinstance(head, DiaynHead) else head
    if num_skills is not None and num_skills != params.out_dim:
        raise ContractError("Head classifies {} skills, got K={}".format(params.out_dim, num_skills))
    if not 0 <= int(z) < params.out_dim:
        raise ContractError("Skill index {} out of range [0, {})".format(z, params.out_dim))
    return float(diayn_rewards(params, state, [z])[0])


def diayn_loss_and_grads(head, states, labels) -> tuple:
    """ Mean multiclass cross-entropy of the classifier and its gradients. """
    params = head.params if isinstance(head, DiaynHead) else head
    states = as_batch(states)
    labels = _check_labels(labels, params.out_dim)
    if states.shape[0] == 0 or states.shape[0] != labels.shape[0]:
        raise ContractError("Got {} states for {} labels".format(states.shape[0], labels.shape[0]))
    logits, cache = mlp_forward(params, states)
    rows = np.arange(labels.shape[0])
    loss = -float(np.mean(log_softmax(logits, axis=1)[rows, labels]))
    d_logits = softmax(logits, axis=1)
    d_logits[rows, labels] -= 1.0
    grads, _ = mlp_backward(params, cache, d_logits / labels.shape[0])
    return loss, grads


def diayn_update(head: DiaynHead, states, labels, lr: float = 1e-4) -> float:
    loss, grads = diayn_loss_and_grads(head, states, labels)
    adam_step(head.params, grads, head.optimizer, lr)
    return loss


class DiaynAgent(DdpgAgent):
    """ DIAYN on continuous control: one-hot skills appended to the observation. """

    kind = "diayn"

    def __init__(self, config: dict, env_spec: EnvSpec, streams: RandomStreams):
        agent = config["agent"]
        self.num_skills = agent["diayn_skills"]
        super(DiaynAgent, self).__init__(config, env_spec, streams, skill_dim=self.num_skills)
        self.lr = agent["lr"]
        self.head = DiaynHead(self.obs_dim, self.num_skills, agent["hidden_dim"], streams.stream("init", 2))

    def sample_skill(self, rng: np.random.Generator) -> np.ndarray:
        return one_hot(int(rng.integers(0, self.num_skills)), self.num_skills)

    def intrinsic_rewards(self, batch: Batch) -> np.ndarray:
        return diayn_rewards(self.head, batch.next_obs, np.argmax(batch.skill, axis=1))

    def representation_update(self, batch: Batch) -> dict:
        return {"diayn_loss": diayn_update(self.head, batch.next_obs, np.argmax(batch.skill, axis=1), self.lr)}

    def sweep_candidates(self, values: list) -> list:
        return [(float(index), one_hot(index, self.num_skills)) for index in range(self.num_skills)]

    def arrays(self) -> dict:
        named = super(DiaynAgent, self).arrays()
        named.update(self.head.arrays())
        return named

    def load_arrays(self, arrays: dict):
        super(DiaynAgent, self).load_arrays(arrays)
        self.head.load_arrays(arrays)


_MOVE_VECTORS = np.array([MOVES[index] for index in range(len(MOVES))], dtype=np.float64)


class TabularDiaynAgent(AgentABC):
    """ DIAYN on a one-hot gridworld with an epsilon-greedy Q table per skill.

    Actions are emitted as unit direction vectors, so the replay buffer and the
    environment treat them like any other continuous action.
    """

    kind = "diayn"

    def __init__(self, config: dict, env_spec: EnvSpec, streams: RandomStreams):
        super(TabularDiaynAgent, self).__init__(config, env_spec, streams)
        agent = config["agent"]
        if env_spec.observation != "onehot":
            raise ContractError("Tabular DIAYN needs one-hot observations")
        self.num_skills = agent["diayn_skills"]
        self.skill_dim = self.num_skills
        self.lr = agent["lr"]
        self.tabular_lr = agent["tabular_lr"]
        self.epsilon = agent["tabular_epsilon"]
        self.q_table = np.zeros((self.num_skills, self.obs_dim, len(MOVES)))
        self.head = DiaynHead(self.obs_dim, self.num_skills, agent["hidden_dim"], streams.stream("init", 2))

    def sample_skill(self, rng: np.random.Generator) -> np.ndarray:
        return one_hot(int(rng.integers(0, self.num_skills)), self.num_skills)

    def act(self, obs, skill, rng: np.random.Generator = None, explore: bool = False) -> np.ndarray:
        state, z = int(np.argmax(obs)), int(np.argmax(skill))
        if explore and rng is not None and rng.uniform() < self.epsilon:
            return _MOVE_VECTORS[int(rng.integers(0, len(MOVES)))].copy()
        return _MOVE_VECTORS[int(np.argmax(self.q_table[z, state]))].copy()

    def _q_update(self, batch: Batch, reward: np.ndarray) -> float:
        z = np.argmax(batch.skill, axis=1)
        state = np.argmax(batch.obs, axis=1)
        nstep_state = np.argmax(batch.nstep_obs, axis=1)
        action = np.array([discretize_action(row) for row in batch.action])
        target = reward + batch.discount * np.max(self.q_table[z, nstep_state], axis=1)
        error = target - self.q_table[z, state, action]
        # repeated (z, s, a) entries of a batch move their cell by the mean error
        index = (z, state, action)
        totals = np.zeros_like(self.q_table)
        counts = np.zeros_like(self.q_table)
        np.add.at(totals, index, error)
        np.add.at(counts, index, 1.0)
        visited = counts > 0
        self.q_table[visited] += self.tabular_lr * totals[visited] / counts[visited]
        return float(np.mean(error ** 2))

    def update(self, batch: Batch, step: int = None) -> dict:
        labels = np.argmax(batch.skill, axis=1)
        loss = diayn_update(self.head, batch.next_obs, labels, self.lr)
        reward = diayn_rewards(self.head, batch.next_obs, labels)
        return {"diayn_loss": loss, "intrinsic_reward": float(np.mean(reward)),
                "critic_loss": self._q_update(batch, reward)}

    def finetune_update(self, batch: Batch, step: int = None) -> dict:
        return {"critic_loss": self._q_update(batch, batch.reward)}

    def sweep_candidates(self, values: list) -> list:
        return [(float(index), one_hot(index, self.num_skills)) for index in range(self.num_skills)]

    def arrays(self) -> dict:
        named = {"tabular.q": self.q_table.copy()}
        named.update(self.head.arrays())
        return named

    def load_arrays(self, arrays: dict):
        self.q_table[...] = arrays["tabular.q"]
        self.head.load_arrays(arrays)


class AptAgent(CicAgent):
    """ Entropy-only agent without skills and without representation learning. """

    kind = "apt"

    def __init__(self, config: dict, env_spec: EnvSpec, streams: RandomStreams):
        super(AptAgent, self).__init__(config, env_spec, streams, skill_dim=0, cic_loss=False, variant="entropy")


class FixedAgent(DdpgAgent):
    """ Constant reward of 1 per step. """

    kind = "fixed"

    def intrinsic_rewards(self, batch: Batch) -> np.ndarray:
        return np.ones(len(batch))


def apt_agent(config: dict, env_spec: EnvSpec, streams: RandomStreams) -> AptAgent:
    return AptAgent(config, env_spec, streams)


def diayn_agent(config: dict, env_spec: EnvSpec, streams: RandomStreams) -> AgentABC:
    """ Tabular DIAYN on one-hot observations, actor-critic DIAYN otherwise. """
    if env_spec.observation == "onehot":
        return TabularDiaynAgent(config, env_spec, streams)
    return DiaynAgent(config, env_spec, streams)
