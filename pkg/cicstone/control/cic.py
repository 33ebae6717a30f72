# -*- coding: utf-8 -*-
""" Contrastive Intrinsic Control.

Skills z are drawn from the uniform prior on [0, 1]^d. Two encoders embed a
transition tau = (s, s') and a skill z into a shared space; their cosine
similarity divided by a temperature T is the critic

    f(tau, z) = <g1(tau), g2(z)> / (|g1(tau)| |g2(z)| T)

An optional prediction head projects the skill embedding before normalisation. The
representation loss is a row-wise softmax cross-entropy over the B x B similarity
matrix of a batch: skills are anchors, the matching transition is the positive
and the other transitions of the batch are the negatives.

This module contains:
- skill sampling,
- the encoders (CicNets) and their contrastive loss with exact gradients,
- the discriminator score log q(tau|z), and
- the intrinsic reward variants.
"""

import numpy as np
from scipy.special import logsumexp, softmax

from cicstone.core.errors import ConfigurationError, ContractError
from cicstone.core.nn import AdamState, MlpParams, adam_step, as_batch, mlp_backward, mlp_forward
from cicstone.control.entropy import particle_entropy_reward

__all__ = ["NORM_EPS", "sample_skill", "constant_skill", "CicNets", "similarity_matrix", "cic_loss",
           "loss_from_logits", "cic_update", "discriminator_score", "score_from_similarities",
           "batch_discriminator_scores", "mean_discriminator_score", "intrinsic_reward", "reward_variants"]

NORM_EPS = 1e-8


def sample_skill(rng: np.random.Generator, d: int) -> np.ndarray:
    """ Draw a skill with i.i.d. uniform entries on [0, 1]. """
    if d < 0:
        raise ContractError("Skill dimension must not be negative, got {}".format(d))
    return rng.uniform(0.0, 1.0, size=d)


def constant_skill(value: float, d: int) -> np.ndarray:
    """ The grid-sweep skill z = value * 1. """
    return np.full(d, float(value))


def _normalize(x: np.ndarray) -> tuple:
    norms = np.sqrt(np.sum(x * x, axis=1, keepdims=True))
    scale = np.maximum(norms, NORM_EPS)
    return x / scale, norms


def _normalize_backward(x: np.ndarray, norms: np.ndarray, grad: np.ndarray) -> np.ndarray:
    scale = np.maximum(norms, NORM_EPS)
    unit = x / scale
    projected = grad - unit * np.sum(unit * grad, axis=1, keepdims=True)
    return np.where(norms > NORM_EPS, projected, grad) / scale


class CicNets:
    """ Transition encoder, skill encoder, optional prediction head and temperature.

    :param obs_dim: Observation width; transitions have width 2 * obs_dim.
    :param skill_dim: Skill width; zero builds a transition encoder only.
    :param embed_dim: Width of the shared embedding space.
    :param hidden_dim: Width of the two hidden layers of every encoder.
    :param rng: Initialization randomness.
    :param temperature: Softmax temperature T > 0.
    :param prediction_head: Whether to project skill embeddings before normalisation.
    :param ensemble_size: Number of extra skill encoders for the uncertainty reward.
    """

    def __init__(self, obs_dim: int, skill_dim: int, embed_dim: int, hidden_dim: int, rng: np.random.Generator,
                 temperature: float = 0.5, prediction_head: bool = True, ensemble_size: int = 0):
        if temperature <= 0:
            raise ConfigurationError("Temperature must be positive, got {}".format(temperature))
        self.obs_dim = obs_dim
        self.skill_dim = skill_dim
        self.embed_dim = embed_dim
        self.temperature = temperature
        self.key_net = MlpParams.initialize([2 * obs_dim, hidden_dim, hidden_dim, embed_dim], rng)
        self.skill_net = None
        self.pred_net = None
        self.ensemble = []
        if skill_dim > 0:
            self.skill_net = MlpParams.initialize([skill_dim, hidden_dim, hidden_dim, embed_dim], rng)
            if prediction_head:
                self.pred_net = MlpParams.initialize([embed_dim, hidden_dim, hidden_dim, embed_dim], rng)
            self.ensemble = [MlpParams.initialize([skill_dim, hidden_dim, hidden_dim, embed_dim], rng)
                             for _ in range(ensemble_size)]
        self.optimizers = {name: AdamState(net) for name, net in self.named_nets().items()}

    def named_nets(self) -> dict:
        nets = {"key_net": self.key_net}
        if self.skill_net is not None:
            nets["skill_net"] = self.skill_net
        if self.pred_net is not None:
            nets["pred_net"] = self.pred_net
        for index, member in enumerate(self.ensemble):
            nets["ensemble_{}".format(index)] = member
        return nets

    def embed_transitions(self, tau) -> np.ndarray:
        return self.key_net(as_batch(tau, 2 * self.obs_dim, "transition batch"))

    def queries(self, skill) -> np.ndarray:
        if self.skill_net is None:
            raise ContractError("These encoders were built without a skill branch")
        embedded = self.skill_net(as_batch(skill, self.skill_dim, "skill batch"))
        return embedded if self.pred_net is None else self.pred_net(embedded)

    def arrays(self, prefix: str = "cic") -> dict:
        named = {}
        for name, net in self.named_nets().items():
            named.update(net.arrays("{}.{}".format(prefix, name)))
            named.update(self.optimizers[name].arrays("{}.{}.adam".format(prefix, name)))
        return named

    def load_arrays(self, arrays: dict, prefix: str = "cic"):
        for name, net in self.named_nets().items():
            net.load_arrays(arrays, "{}.{}".format(prefix, name))
            self.optimizers[name].load_arrays(arrays, "{}.{}.adam".format(prefix, name))


def similarity_matrix(tau, skill, nets: CicNets) -> np.ndarray:
    """ B x B logits; entry [i][j] compares skill i with transition j, the diagonal holds the positives. """
    tau = as_batch(tau, 2 * nets.obs_dim, "transition batch")
    skill = as_batch(skill, nets.skill_dim, "skill batch")
    if tau.shape[0] != skill.shape[0]:
        raise ContractError("Got {} transitions for {} skills".format(tau.shape[0], skill.shape[0]))
    query, _ = _normalize(nets.queries(skill))
    key, _ = _normalize(nets.embed_transitions(tau))
    return query @ key.T / nets.temperature


def loss_from_logits(logits: np.ndarray) -> float:
    """ Mean row-wise cross-entropy with the diagonal as labels. """
    logits = np.asarray(logits, dtype=np.float64)
    return float(np.mean(logsumexp(logits, axis=1) - np.diag(logits)))


def cic_loss(tau, skill, nets: CicNets) -> tuple:
    """ Contrastive loss of a batch and its gradients.

    :param tau: Transitions concat(s, s') of shape (B, 2 * obs_dim).
    :param skill: Skills of shape (B, skill_dim).
    :param nets: Encoders.
    :return: Tuple of (loss, dict of gradients keyed like nets.named_nets()).
    """
    tau = as_batch(tau, 2 * nets.obs_dim, "transition batch")
    skill = as_batch(skill, nets.skill_dim, "skill batch")
    batch = tau.shape[0]
    if batch < 2:
        raise ContractError("The contrastive loss needs at least 2 rows, got {}".format(batch))
    if skill.shape[0] != batch:
        raise ContractError("Got {} transitions for {} skills".format(batch, skill.shape[0]))
    if nets.skill_net is None:
        raise ContractError("These encoders were built without a skill branch")
    temperature = nets.temperature

    # forward
    key_raw, key_cache = mlp_forward(nets.key_net, tau)
    skill_raw, skill_cache = mlp_forward(nets.skill_net, skill)
    query_raw, pred_cache = skill_raw, None
    if nets.pred_net is not None:
        query_raw, pred_cache = mlp_forward(nets.pred_net, skill_raw)
    query, query_norms = _normalize(query_raw)
    key, key_norms = _normalize(key_raw)
    logits = query @ key.T / temperature
    loss = float(np.mean(logsumexp(logits, axis=1) - np.diag(logits)))

    # backward
    d_logits = (softmax(logits, axis=1) - np.eye(batch)) / batch
    d_query = _normalize_backward(query_raw, query_norms, d_logits @ key / temperature)
    d_key = _normalize_backward(key_raw, key_norms, d_logits.T @ query / temperature)
    grads = {"key_net": mlp_backward(nets.key_net, key_cache, d_key)[0]}
    d_skill = d_query
    if nets.pred_net is not None:
        grads["pred_net"], d_skill = mlp_backward(nets.pred_net, pred_cache, d_query)
    grads["skill_net"] = mlp_backward(nets.skill_net, skill_cache, d_skill)[0]
    return loss, grads


def _member_loss(member: MlpParams, key: np.ndarray, skill: np.ndarray, temperature: float) -> tuple:
    """ Contrastive loss of one ensemble skill encoder against fixed normalised keys. """
    raw, cache = mlp_forward(member, skill)
    query, norms = _normalize(raw)
    logits = query @ key.T / temperature
    batch = logits.shape[0]
    d_logits = (softmax(logits, axis=1) - np.eye(batch)) / batch
    d_raw = _normalize_backward(raw, norms, d_logits @ key / temperature)
    return loss_from_logits(logits), mlp_backward(member, cache, d_raw)[0]


def cic_update(nets: CicNets, tau, skill, lr: float = 1e-4) -> float:
    """ One Adam step of every encoder on the contrastive loss; returns the loss before the step. """
    loss, grads = cic_loss(tau, skill, nets)
    for name, net_grads in grads.items():
        adam_step(nets.named_nets()[name], net_grads, nets.optimizers[name], lr)
    if nets.ensemble:
        key, _ = _normalize(nets.embed_transitions(tau))
        skill = as_batch(skill, nets.skill_dim, "skill batch")
        for index, member in enumerate(nets.ensemble):
            name = "ensemble_{}".format(index)
            _, member_grads = _member_loss(member, key, skill, nets.temperature)
            adam_step(member, member_grads, nets.optimizers[name], lr)
    return loss


def score_from_similarities(positive: float, similarities) -> float:
    """ log q(tau|z) = f(tau, z) - log mean_j exp f(tau_j, z), where the N similarities include the positive. """
    similarities = np.asarray(similarities, dtype=np.float64).reshape(-1)
    if similarities.shape[0] < 1:
        raise ContractError("The discriminator needs at least one similarity term")
    gap = min(0.0, float(positive) - float(logsumexp(similarities)))
    return gap + float(np.log(similarities.shape[0]))


def discriminator_score(tau, skill, candidates, nets: CicNets) -> float:
    """ Discriminator score of one transition under one skill.

    :param tau: The positive transition.
    :param skill: The skill.
    :param candidates: The N transitions of the log-mean-exp, the positive included.
    :param nets: Encoders.
    :return: log q(tau|z), never above log N.
    """
    candidates = as_batch(candidates, 2 * nets.obs_dim, "candidate batch")
    query, _ = _normalize(nets.queries(skill))
    keys, _ = _normalize(nets.embed_transitions(candidates))
    positive, _ = _normalize(nets.embed_transitions(tau))
    similarities = keys @ query[0] / nets.temperature
    return score_from_similarities(float(positive[0] @ query[0] / nets.temperature), similarities)


def batch_discriminator_scores(logits) -> np.ndarray:
    """ Per-row discriminator score of a similarity matrix with in-batch negatives. """
    logits = np.asarray(logits, dtype=np.float64)
    gaps = np.minimum(np.diag(logits) - logsumexp(logits, axis=1), 0.0)
    return gaps + np.log(logits.shape[0])


def mean_discriminator_score(logits) -> float:
    """ Batch mean of the discriminator score; bounded above by log N exactly. """
    logits = np.asarray(logits, dtype=np.float64)
    gaps = np.minimum(np.diag(logits) - logsumexp(logits, axis=1), 0.0)
    return float(np.log(logits.shape[0]) + np.mean(gaps))


def _entropy_term(embeddings: np.ndarray, k: int, form: str) -> np.ndarray:
    return particle_entropy_reward(embeddings, k=min(k, embeddings.shape[0] - 1), form=form)


def _discriminator_term(tau, skill, nets: CicNets) -> np.ndarray:
    return batch_discriminator_scores(similarity_matrix(tau, skill, nets))


def _similarity_term(tau, skill, nets: CicNets) -> np.ndarray:
    return np.diag(similarity_matrix(tau, skill, nets)) * nets.temperature


def _uncertainty_term(tau, skill, nets: CicNets) -> np.ndarray:
    if len(nets.ensemble) < 2:
        raise ConfigurationError("The uncertainty reward needs an ensemble of at least 2 skill encoders")
    key, _ = _normalize(nets.embed_transitions(tau))
    skill = as_batch(skill, nets.skill_dim, "skill batch")
    cosines = np.stack([np.sum(_normalize(member(skill))[0] * key, axis=1) for member in nets.ensemble])
    return np.std(cosines, axis=0)


reward_variants = {
    "entropy": None,
    "discriminator": _discriminator_term,
    "similarity": _similarity_term,
    "uncertainty": _uncertainty_term,
}
"""dict: Variant -> extra term added to the entropy reward (None for the entropy-only reward)."""


def intrinsic_reward(variant: str, batch, nets: CicNets, k: int = 12, form: str = "log1p_mean") -> np.ndarray:
    """ Intrinsic reward of every row of a batch, before normalisation.

    :param variant: One of entropy, discriminator, similarity or uncertainty.
    :param batch: Replay batch (uses its transitions and skills).
    :param nets: Encoders.
    :param k: Neighbours of the particle entropy estimate.
    :param form: Particle entropy form.
    :return: Reward per row.
    """
    if variant not in reward_variants:
        raise ConfigurationError("Unknown intrinsic reward variant '{}'. Allowed: {}".format(
            variant, ", ".join(reward_variants)))
    tau = batch.transitions
    reward = _entropy_term(nets.embed_transitions(tau), k, form)
    if reward_variants[variant] is not None:
        reward = reward + reward_variants[variant](tau, batch.skill, nets)
    return reward
