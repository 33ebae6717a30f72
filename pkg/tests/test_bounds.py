# -*- coding: utf-8 -*-

import numpy as np
import pytest

from cicstone.core.errors import ContractError
from cicstone.control.bounds import (barber_agakov_bound, exact_mutual_information, fit_tabular_q, posterior,
                                     skill_entropy)


def _random_joint(rng, sparse=False):
    shape = (int(rng.integers(1, 9)), int(rng.integers(1, 9)))
    joint = rng.dirichlet(np.ones(shape[0] * shape[1])).reshape(shape)
    if sparse:
        joint[rng.uniform(size=shape) < 0.3] = 0.0
        if joint.sum() == 0.0:
            joint[0, 0] = 1.0
        joint /= joint.sum()
    return joint


def test_independent_joint_has_zero_information():
    joint = np.outer([0.25, 0.75], [0.5, 0.3, 0.2])
    assert exact_mutual_information(joint) == pytest.approx(0.0, abs=1e-12)


def test_deterministic_joint_information_is_skill_entropy():
    joint = np.diag([0.25, 0.25, 0.5])
    assert exact_mutual_information(joint) == pytest.approx(skill_entropy(joint))
    assert barber_agakov_bound(joint, posterior(joint)) == pytest.approx(skill_entropy(joint))


@pytest.mark.parametrize("sparse", [False, True])
def test_bound_never_exceeds_information(rng, sparse):
    for _ in range(200):
        joint = _random_joint(rng, sparse)
        information = exact_mutual_information(joint)
        fitted = fit_tabular_q(joint, steps=200, rng=rng)
        random_q = rng.dirichlet(np.ones(joint.shape[1]), size=joint.shape[0])
        assert barber_agakov_bound(joint, fitted) <= information + 1e-9
        assert barber_agakov_bound(joint, random_q) <= information + 1e-9


@pytest.mark.parametrize("sparse", [False, True])
def test_bound_is_tight_at_the_posterior(rng, sparse):
    for _ in range(200):
        joint = _random_joint(rng, sparse)
        assert barber_agakov_bound(joint, posterior(joint)) == pytest.approx(exact_mutual_information(joint),
                                                                             abs=1e-6)


def test_fitting_improves_on_the_uniform_guess(rng):
    joint = np.array([[0.3, 0.05], [0.05, 0.3], [0.15, 0.15]])
    uniform = np.full(joint.shape, 0.5)
    fitted = fit_tabular_q(joint, steps=500)
    assert barber_agakov_bound(joint, fitted) > barber_agakov_bound(joint, uniform)
    assert np.allclose(fitted.sum(axis=1), 1.0)
    assert np.allclose(fitted, posterior(joint), atol=1e-3)


def test_zero_q_on_the_support():
    joint = np.array([[0.5, 0.0], [0.0, 0.5]])
    assert barber_agakov_bound(joint, np.array([[0.0, 1.0], [0.0, 1.0]])) == float("-inf")


def test_invalid_joints():
    with pytest.raises(ContractError):
        exact_mutual_information(np.array([[0.5, 0.6]]))
    with pytest.raises(ContractError):
        exact_mutual_information(np.array([[-0.1, 1.1]]))
    with pytest.raises(ContractError, match="shape"):
        barber_agakov_bound(np.array([[1.0]]), np.ones((1, 2)))
