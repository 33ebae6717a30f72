# -*- coding: utf-8 -*-
""" Skill-Conditioned DDPG.

The actor maps concat(s, z) to an action in [-1, 1]^action_dim through a tanh output;
the critic maps concat(s, a, z) to a scalar. One online critic is trained toward

    y = R + gamma^n Q_target(s_n, pi(s_n, z), z)

where the bootstrap action is the online actor's mean action with no noise, and
the actor ascends Q(s, pi(s, z), z) with the critic held fixed. The target critic
follows the online one by Polyak averaging after every critic update.
"""

import numpy as np

from cicstone.core.errors import ContractError, TrainingError
from cicstone.core.nn import AdamState, MlpParams, adam_step, as_batch, mlp_backward, mlp_forward, polyak_update

__all__ = ["apply_exploration", "act", "compute_targets", "critic_loss_and_grads", "actor_loss_and_grads",
           "target_sync", "DdpgLearner"]


def apply_exploration(mean_action, noise, clip: float = 0.3) -> np.ndarray:
    """ mean + clip(noise, -clip, clip), clamped to the action box. """
    return np.clip(np.asarray(mean_action) + np.clip(noise, -clip, clip), -1.0, 1.0)


def act(actor: MlpParams, obs, skill, rng: np.random.Generator = None, explore: bool = False,
        stddev: float = 0.2, stddev_clip: float = 0.3) -> np.ndarray:
    """ Action of the actor for one observation and skill.

    :param actor: Actor perceptron over concat(s, z).
    :param obs: Observation vector.
    :param skill: Skill vector (may be empty).
    :param rng: Source of exploration noise; required when exploring.
    :param explore: Whether to add clipped Gaussian noise.
    :param stddev: Noise standard deviation.
    :param stddev_clip: Per-component bound on the noise.
    :return: Action vector inside [-1, 1]^action_dim.
    """
    inputs = np.concatenate([np.reshape(obs, -1), np.reshape(skill, -1)])
    mean_action = actor(inputs)[0]
    if not explore:
        return mean_action
    if rng is None:
        raise ContractError("Exploration needs a random generator")
    return apply_exploration(mean_action, rng.normal(0.0, stddev, size=mean_action.shape), stddev_clip)


def _skill_batch(skill, rows: int) -> np.ndarray:
    """ Skills as a (rows, skill_dim) matrix; skill_dim may be zero. """
    skill = np.asarray(skill, dtype=np.float64)
    if skill.size == 0:
        return np.zeros((rows, 0))
    return skill.reshape(rows, -1)


def _critic_inputs(obs, action, skill) -> np.ndarray:
    return np.concatenate([obs, action, skill], axis=1)


def compute_targets(actor: MlpParams, critic_target: MlpParams, reward, discount, nstep_obs, skill,
                    step: int = None) -> np.ndarray:
    """ Bellman targets y = R + discount * Q_target(s_n, pi(s_n, z), z), discount being gamma^n or 0. """
    nstep_obs = as_batch(nstep_obs)
    skill = _skill_batch(skill, nstep_obs.shape[0])
    bootstrap_action = actor(np.concatenate([nstep_obs, skill], axis=1))
    bootstrap = critic_target(_critic_inputs(nstep_obs, bootstrap_action, skill))[:, 0]
    targets = np.asarray(reward, dtype=np.float64) + np.asarray(discount, dtype=np.float64) * bootstrap
    if not np.all(np.isfinite(targets)):
        raise TrainingError("Non-finite Bellman target", step=step)
    return targets


def critic_loss_and_grads(critic: MlpParams, obs, action, skill, targets) -> tuple:
    """ Mean squared Bellman error and its gradient with respect to the online critic. """
    obs = as_batch(obs)
    skill = _skill_batch(skill, obs.shape[0])
    values, cache = mlp_forward(critic, _critic_inputs(obs, as_batch(action), skill))
    error = values[:, 0] - np.asarray(targets, dtype=np.float64)
    loss = float(np.mean(error ** 2))
    grads, _ = mlp_backward(critic, cache, (2.0 * error / error.shape[0])[:, None])
    return loss, grads


def _critic_value_and_action_grad(critic, obs, action, skill) -> tuple:
    if callable(critic) and not isinstance(critic, MlpParams):
        return critic(obs, action, skill)
    values, cache = mlp_forward(critic, _critic_inputs(obs, action, skill))
    _, input_grad = mlp_backward(critic, cache, np.ones_like(values))
    width = obs.shape[1]
    return values[:, 0], input_grad[:, width:width + action.shape[1]]


def actor_loss_and_grads(actor: MlpParams, critic, obs, skill) -> tuple:
    """ Loss -mean Q(s, pi(s, z), z) and its gradient with respect to the actor.

    :param actor: Actor perceptron.
    :param critic: Critic perceptron, or a callable (obs, action, skill) -> (Q values, dQ/da).
    :param obs: Observation batch.
    :param skill: Skill batch.
    :return: Tuple of (loss, actor gradients).
    """
    obs = as_batch(obs)
    skill = _skill_batch(skill, obs.shape[0])
    actions, cache = mlp_forward(actor, np.concatenate([obs, skill], axis=1))
    values, action_grad = _critic_value_and_action_grad(critic, obs, actions, skill)
    loss = -float(np.mean(values))
    grads, _ = mlp_backward(actor, cache, -np.asarray(action_grad) / obs.shape[0])
    return loss, grads


def target_sync(critic_target: MlpParams, critic: MlpParams, rate: float = 0.01) -> MlpParams:
    return polyak_update(critic_target, critic, rate)


class DdpgLearner:
    """ Actor, critic, target critic and their optimizers.

    :param obs_dim: Observation width.
    :param skill_dim: Skill width (zero for skill-free agents).
    :param action_dim: Action width.
    :param hidden_dim: Hidden width of both perceptrons.
    :param rng: Initialization randomness.
    """

    def __init__(self, obs_dim: int, skill_dim: int, action_dim: int, hidden_dim: int, rng: np.random.Generator,
                 lr: float = 1e-4, stddev: float = 0.2, stddev_clip: float = 0.3, critic_tau: float = 0.01):
        self.obs_dim = obs_dim
        self.skill_dim = skill_dim
        self.action_dim = action_dim
        self.lr = lr
        self.stddev = stddev
        self.stddev_clip = stddev_clip
        self.critic_tau = critic_tau
        self.actor = MlpParams.initialize([obs_dim + skill_dim, hidden_dim, hidden_dim, action_dim], rng, "tanh")
        self.critic = MlpParams.initialize([obs_dim + action_dim + skill_dim, hidden_dim, hidden_dim, 1], rng)
        self.critic_target = self.critic.copy()
        self.actor_opt = AdamState(self.actor)
        self.critic_opt = AdamState(self.critic)
        self.last_targets = None

    def act(self, obs, skill, rng: np.random.Generator = None, explore: bool = False) -> np.ndarray:
        return act(self.actor, obs, skill, rng, explore, self.stddev, self.stddev_clip)

    def update(self, obs, action, reward, discount, nstep_obs, skill, step: int = None) -> dict:
        """ One critic step, one actor step and one target sync. """
        targets = compute_targets(self.actor, self.critic_target, reward, discount, nstep_obs, skill, step)
        critic_loss, critic_grads = critic_loss_and_grads(self.critic, obs, action, skill, targets)
        if not np.isfinite(critic_loss):
            raise TrainingError("Non-finite critic loss", step=step)
        adam_step(self.critic, critic_grads, self.critic_opt, self.lr)
        actor_loss, actor_grads = actor_loss_and_grads(self.actor, self.critic, obs, skill)
        adam_step(self.actor, actor_grads, self.actor_opt, self.lr)
        target_sync(self.critic_target, self.critic, self.critic_tau)
        self.last_targets = targets
        return {"critic_loss": critic_loss, "actor_loss": actor_loss}

    def arrays(self, prefix: str = "ddpg") -> dict:
        named = {}
        named.update(self.actor.arrays(prefix + ".actor"))
        named.update(self.critic.arrays(prefix + ".critic"))
        named.update(self.critic_target.arrays(prefix + ".critic_target"))
        named.update(self.actor_opt.arrays(prefix + ".actor.adam"))
        named.update(self.critic_opt.arrays(prefix + ".critic.adam"))
        return named

    def load_arrays(self, arrays: dict, prefix: str = "ddpg"):
        self.actor.load_arrays(arrays, prefix + ".actor")
        self.critic.load_arrays(arrays, prefix + ".critic")
        self.critic_target.load_arrays(arrays, prefix + ".critic_target")
        self.actor_opt.load_arrays(arrays, prefix + ".actor.adam")
        self.critic_opt.load_arrays(arrays, prefix + ".critic.adam")
