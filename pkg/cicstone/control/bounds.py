# -*- coding: utf-8 -*-
""" Mutual Information Bounds.

Exact quantities on small enumerable joints p(tau, z), given as a matrix with one row
per transition value and one column per skill value. Used to check that the
variational lower bound

    H(z) + E_p[log q(z|tau)] <= I(tau; z)

holds for any conditional q and is tight at q = p(z|tau).
"""

import numpy as np
from scipy.special import softmax

from cicstone.core.errors import ContractError

__all__ = ["check_joint", "exact_mutual_information", "skill_entropy", "posterior", "barber_agakov_bound",
           "fit_tabular_q"]


def check_joint(joint) -> np.ndarray:
    joint = np.asarray(joint, dtype=np.float64)
    if joint.ndim != 2 or joint.size == 0:
        raise ContractError("A joint distribution must be a non-empty matrix")
    if np.any(joint < 0.0) or abs(float(joint.sum()) - 1.0) > 1e-9:
        raise ContractError("Joint entries must be non-negative and sum to 1")
    return joint


def _plogp(p: np.ndarray) -> np.ndarray:
    safe = np.where(p > 0.0, p, 1.0)
    return np.where(p > 0.0, p * np.log(safe), 0.0)


def skill_entropy(joint) -> float:
    joint = check_joint(joint)
    return float(-np.sum(_plogp(joint.sum(axis=0))))


def exact_mutual_information(joint) -> float:
    """ I(tau; z) by enumeration. """
    joint = check_joint(joint)
    marginal_tau = joint.sum(axis=1, keepdims=True)
    marginal_z = joint.sum(axis=0, keepdims=True)
    product = marginal_tau * marginal_z
    support = joint > 0.0
    ratio = np.where(support, joint, 1.0) / np.where(support, product, 1.0)
    return float(np.sum(np.where(support, joint * np.log(ratio), 0.0)))


def posterior(joint) -> np.ndarray:
    """ p(z|tau); rows of transitions with zero mass are uniform. """
    joint = check_joint(joint)
    marginal_tau = joint.sum(axis=1, keepdims=True)
    uniform = np.full_like(joint, 1.0 / joint.shape[1])
    return np.where(marginal_tau > 0.0, joint / np.where(marginal_tau > 0.0, marginal_tau, 1.0), uniform)


def barber_agakov_bound(joint, q) -> float:
    """ H(z) + E_p[log q(z|tau)] for a tabular conditional q of the same shape as the joint. """
    joint = check_joint(joint)
    q = np.asarray(q, dtype=np.float64)
    if q.shape != joint.shape:
        raise ContractError("q has shape {} but the joint has shape {}".format(q.shape, joint.shape))
    support = joint > 0.0
    if np.any(support & (q <= 0.0)):
        return float("-inf")
    expected = np.sum(np.where(support, joint * np.log(np.where(support, q, 1.0)), 0.0))
    return skill_entropy(joint) + float(expected)


def fit_tabular_q(joint, steps: int = 500, lr: float = 1.0, rng: np.random.Generator = None) -> np.ndarray:
    """ Fit q(z|tau) = softmax(L[tau]) by gradient ascent on E_p[log q(z|tau)].

    :param joint: Enumerable joint p(tau, z).
    :param steps: Number of full-batch ascent steps.
    :param lr: Step size.
    :param rng: Optional source of a random initialization of the logits.
    :return: The fitted conditional, rows summing to 1.
    """
    joint = check_joint(joint)
    logits = np.zeros_like(joint) if rng is None else rng.normal(0.0, 1.0, size=joint.shape)
    marginal_tau = joint.sum(axis=1, keepdims=True)
    for _ in range(steps):
        # d/dL E_p[log q] = p(tau, z) - p(tau) q(z|tau)
        logits += lr * (joint - marginal_tau * softmax(logits, axis=1))
    return softmax(logits, axis=1)
