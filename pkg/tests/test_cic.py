# -*- coding: utf-8 -*-

import numpy as np
import pytest

from cicstone.core.errors import ConfigurationError, ContractError
from cicstone.control.cic import (CicNets, batch_discriminator_scores, cic_loss, cic_update, constant_skill,
                                  discriminator_score, intrinsic_reward, loss_from_logits,
                                  mean_discriminator_score, sample_skill, score_from_similarities,
                                  similarity_matrix)
from cicstone.control.entropy import particle_entropy_reward
from cicstone.control.replay import Batch

from conftest import assert_grads_close, numeric_param_grads


def _nets(rng, **options):
    return CicNets(**{"obs_dim": 2, "skill_dim": 3, "embed_dim": 4, "hidden_dim": 6, "rng": rng, **options})


def _batch(rng, size=8, obs_dim=2, skill_dim=3):
    obs = rng.normal(size=(size, obs_dim))
    return Batch(obs=obs, action=np.zeros((size, 2)), reward=np.zeros(size), discount=np.ones(size),
                 next_obs=obs + 0.1 * rng.normal(size=(size, obs_dim)), nstep_obs=obs,
                 skill=rng.uniform(size=(size, skill_dim)), indices=np.arange(size))


def test_hand_computed_loss():
    assert loss_from_logits(np.eye(3)) == pytest.approx(-np.log(np.e / (np.e + 2.0)))
    assert loss_from_logits(np.eye(3)) == pytest.approx(0.5514, abs=1e-4)
    assert loss_from_logits(np.zeros((5, 5))) == pytest.approx(np.log(5.0))


def test_hand_computed_discriminator_score():
    assert score_from_similarities(1.0, [1.0, 0.0, 0.0]) == pytest.approx(1.0 - np.log((np.e + 2.0) / 3.0))
    assert score_from_similarities(1.0, [1.0, 0.0, 0.0]) == pytest.approx(0.5486, abs=1e-4)
    assert score_from_similarities(0.0, np.zeros(4)) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("size", [2, 16, 256])
def test_batch_score_never_exceeds_log_n(rng, size):
    bound = np.log(size)
    for _ in range(1000):
        logits = rng.normal(scale=rng.uniform(0.1, 20.0), size=(size, size))
        assert mean_discriminator_score(logits) <= bound
        assert np.all(batch_discriminator_scores(logits) <= bound)


def test_single_transition_score_never_exceeds_log_n(rng):
    nets = _nets(rng, temperature=0.1)
    tau = rng.normal(size=(6, 4))
    for row in range(6):
        score = discriminator_score(tau[row], rng.uniform(size=3), tau, nets)
        assert score <= np.log(6)


def test_similarity_matrix_shape_and_scale(rng):
    nets = _nets(rng, temperature=0.25)
    batch = _batch(rng)
    logits = similarity_matrix(batch.transitions, batch.skill, nets)
    assert logits.shape == (8, 8)
    assert np.all(np.abs(logits) <= 4.0 + 1e-12)


def test_loss_matches_logits(rng):
    nets = _nets(rng)
    batch = _batch(rng)
    loss, grads = cic_loss(batch.transitions, batch.skill, nets)
    assert loss == pytest.approx(loss_from_logits(similarity_matrix(batch.transitions, batch.skill, nets)))
    assert set(grads) == {"key_net", "skill_net", "pred_net"}


@pytest.mark.parametrize("prediction_head", [True, False])
def test_loss_gradients_match_finite_differences(rng, prediction_head):
    nets = _nets(rng, prediction_head=prediction_head, temperature=0.5)
    batch = _batch(rng, size=5)
    tau, skill = batch.transitions, batch.skill
    _, grads = cic_loss(tau, skill, nets)

    def loss():
        return cic_loss(tau, skill, nets)[0]

    for name, net in nets.named_nets().items():
        assert_grads_close(grads[name], numeric_param_grads(net, loss))


def test_loss_is_invariant_to_joint_row_permutation(rng):
    nets = _nets(rng)
    batch = _batch(rng)
    order = rng.permutation(8)
    first, _ = cic_loss(batch.transitions, batch.skill, nets)
    second, _ = cic_loss(batch.transitions[order], batch.skill[order], nets)
    assert first == pytest.approx(second, rel=1e-12)


def test_single_row_batch_is_rejected(rng):
    nets = _nets(rng)
    with pytest.raises(ContractError, match="at least 2"):
        cic_loss(np.zeros((1, 4)), np.zeros((1, 3)), nets)


def test_zero_skill_dim_has_no_skill_branch(rng):
    nets = CicNets(obs_dim=2, skill_dim=0, embed_dim=4, hidden_dim=6, rng=rng)
    assert list(nets.named_nets()) == ["key_net"]
    assert nets.key_net.in_dim == 4
    with pytest.raises(ContractError):
        nets.queries(np.zeros((1, 0)))


def test_updates_lower_the_loss_on_a_fixed_batch(rng):
    nets = _nets(rng, hidden_dim=16)
    batch = _batch(rng)
    first = cic_update(nets, batch.transitions, batch.skill, lr=1e-2)
    for _ in range(200):
        last = cic_update(nets, batch.transitions, batch.skill, lr=1e-2)
    assert last < first


def test_entropy_variant_is_the_entropy_reward(rng):
    nets = _nets(rng)
    batch = _batch(rng)
    expected = particle_entropy_reward(nets.embed_transitions(batch.transitions), k=3)
    assert np.array_equal(intrinsic_reward("entropy", batch, nets, k=3), expected)


def test_entropy_neighbours_are_capped_by_batch_size(rng):
    nets = _nets(rng)
    batch = _batch(rng, size=4)
    expected = particle_entropy_reward(nets.embed_transitions(batch.transitions), k=3)
    assert np.array_equal(intrinsic_reward("entropy", batch, nets, k=12), expected)


def test_similarity_variant_adds_one_for_aligned_embeddings(rng, monkeypatch):
    nets = _nets(rng)
    batch = _batch(rng)
    embeddings = rng.normal(size=(8, 4))
    monkeypatch.setattr(nets, "queries", lambda skill: embeddings)
    monkeypatch.setattr(nets, "embed_transitions", lambda tau: embeddings)
    difference = intrinsic_reward("similarity", batch, nets) - intrinsic_reward("entropy", batch, nets)
    assert np.allclose(difference, 1.0, atol=1e-12)


def test_uncertainty_variant_is_zero_for_identical_members(rng):
    nets = _nets(rng, ensemble_size=2)
    nets.ensemble[1] = nets.ensemble[0].copy()
    batch = _batch(rng)
    assert np.array_equal(intrinsic_reward("uncertainty", batch, nets), intrinsic_reward("entropy", batch, nets))


def test_uncertainty_needs_two_members(rng):
    with pytest.raises(ConfigurationError, match="ensemble"):
        intrinsic_reward("uncertainty", _batch(rng), _nets(rng, ensemble_size=1))


def test_unknown_variant(rng):
    with pytest.raises(ConfigurationError, match="discriminator"):
        intrinsic_reward("curiosity", _batch(rng), _nets(rng))


def test_discriminator_variant_stays_below_entropy_plus_log_n(rng):
    nets = _nets(rng)
    batch = _batch(rng)
    difference = intrinsic_reward("discriminator", batch, nets) - intrinsic_reward("entropy", batch, nets)
    assert np.all(difference <= np.log(8) + 1e-12)


def test_ensemble_members_train_without_moving_the_keys(rng):
    nets = _nets(rng, ensemble_size=2)
    batch = _batch(rng)
    before = nets.ensemble[0].copy()
    cic_update(nets, batch.transitions, batch.skill, lr=1e-2)
    assert not np.array_equal(before.layers[0][0], nets.ensemble[0].layers[0][0])


def test_skill_sampling(rng):
    skills = np.array([sample_skill(rng, 3) for _ in range(100000)])
    assert np.all((skills >= 0.0) & (skills <= 1.0))
    # three standard errors of the mean and of the variance over 1e5 draws
    assert np.allclose(skills.mean(axis=0), 0.5, atol=3e-3)
    assert np.allclose(skills.var(axis=0), 1.0 / 12.0, atol=8e-4)
    assert sample_skill(rng, 0).shape == (0,)
    with pytest.raises(ContractError):
        sample_skill(rng, -1)
    assert constant_skill(0.3, 4).tolist() == [0.3] * 4


def test_encoder_arrays_round_trip(rng):
    source, target = _nets(rng, ensemble_size=2), _nets(np.random.default_rng(5), ensemble_size=2)
    target.load_arrays(source.arrays())
    batch = _batch(rng)
    assert np.array_equal(similarity_matrix(batch.transitions, batch.skill, source),
                          similarity_matrix(batch.transitions, batch.skill, target))


def test_lower_temperature_lowers_the_loss_of_a_dominant_diagonal(rng):
    embeddings = rng.normal(size=(6, 4))
    embeddings /= np.linalg.norm(embeddings, axis=1, keepdims=True)
    # identical queries and keys: every diagonal cosine is 1, every other one is below
    cosines = embeddings @ embeddings.T
    losses = [loss_from_logits(cosines / temperature) for temperature in (2.0, 1.0, 0.5, 0.1)]
    assert all(later < earlier for earlier, later in zip(losses, losses[1:]))


def test_training_separates_generated_transitions(rng):
    nets = CicNets(obs_dim=2, skill_dim=3, embed_dim=8, hidden_dim=16, rng=rng)
    generator = rng.normal(size=(3, 4))

    def generated(size):
        skill = rng.uniform(size=(size, 3))
        return skill @ generator + 0.01 * rng.normal(size=(size, 4)), skill

    for _ in range(400):
        cic_update(nets, *generated(32), lr=3e-3)
    logits = similarity_matrix(*generated(64), nets)
    diagonal = np.diag(logits)
    off_diagonal = logits[~np.eye(64, dtype=bool)]
    standard_error = np.sqrt(diagonal.var(ddof=1) / diagonal.size + off_diagonal.var(ddof=1) / off_diagonal.size)
    assert diagonal.mean() - off_diagonal.mean() >= 5.0 * standard_error
