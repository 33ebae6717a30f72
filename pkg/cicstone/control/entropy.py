# -*- coding: utf-8 -*-
""" Particle Entropy Reward.

Nonparametric entropy of state-transition embeddings, estimated up to a constant
from the distances of each particle to its k nearest neighbours. Two forms:

    log1p_mean:  r_i = log(1 + mean_j d_ij)
    literal:     r_i = mean_j log(max(d_ij, 1e-12))

The reference set is the current batch itself; a row never counts as its own
neighbour. Search is exact.
"""

import numpy as np

from cicstone.core.errors import ConfigurationError, ContractError

__all__ = ["knn_distances", "particle_entropy_reward", "RewardNormalizer", "ENTROPY_FORMS", "DISTANCE_FLOOR"]

DISTANCE_FLOOR = 1e-12

ENTROPY_FORMS = {
    "log1p_mean": lambda distances: np.log1p(np.mean(distances)),
    "literal": lambda distances: np.mean(np.log(np.maximum(distances, DISTANCE_FLOOR))),
}
"""dict: Form name -> reward of one row given its ascending neighbour distances."""


def _distances(query: np.ndarray, points: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum((points - query) ** 2, axis=1))


def knn_distances(query, points, k: int, exclude_index: int = None) -> np.ndarray:
    """ Distances from a query to its k nearest points, ascending.

    :param query: Embedding vector.
    :param points: Reference set (N, d).
    :param k: Number of neighbours.
    :param exclude_index: Index of the query inside the set, skipped as its own neighbour.
    :return: The k smallest Euclidean distances.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    query = np.asarray(query, dtype=np.float64).reshape(-1)
    distances = _distances(query, points)
    if exclude_index is not None:
        distances = np.delete(distances, exclude_index)
    if k < 1 or k > distances.shape[0]:
        raise ContractError("Asked for {} neighbours but only {} points are available".format(
            k, distances.shape[0]))
    nearest = np.partition(distances, k - 1)[:k] if k < distances.shape[0] else distances
    return np.sort(nearest)


def particle_entropy_reward(embeddings, reference=None, k: int = 12, form: str = "log1p_mean") -> np.ndarray:
    """ Per-row particle entropy reward.

    :param embeddings: Batch embeddings (B, d).
    :param reference: Reference set; defaults to the batch itself with self excluded.
    :param k: Number of neighbours.
    :param form: 'log1p_mean' or 'literal'.
    :return: Reward per row.
    """
    if form not in ENTROPY_FORMS:
        raise ConfigurationError("Unknown entropy form '{}'. Allowed: {}".format(form, ", ".join(ENTROPY_FORMS)))
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.ndim == 1:
        embeddings = embeddings[:, None]
    same_set = reference is None
    reference = embeddings if same_set else np.asarray(reference, dtype=np.float64)
    rewards = np.empty(embeddings.shape[0])
    for row in range(embeddings.shape[0]):
        distances = knn_distances(embeddings[row], reference, k, exclude_index=row if same_set else None)
        rewards[row] = ENTROPY_FORMS[form](distances)
    return rewards


class RewardNormalizer:
    """ Divides rewards by an exponential running mean of their batch means.

    :param momentum: Weight of the previous estimate.
    """

    def __init__(self, momentum: float = 0.99):
        self.momentum = momentum
        self.mean = None

    def __call__(self, rewards: np.ndarray) -> np.ndarray:
        batch_mean = float(np.mean(rewards))
        if self.mean is None:
            self.mean = batch_mean
        else:
            self.mean = self.momentum * self.mean + (1.0 - self.momentum) * batch_mean
        return rewards / max(abs(self.mean), 1e-8)

    def arrays(self, prefix: str) -> dict:
        return {"{}.mean".format(prefix): np.array([np.nan if self.mean is None else self.mean])}

    def load_arrays(self, arrays: dict, prefix: str):
        value = float(arrays["{}.mean".format(prefix)][0])
        self.mean = None if np.isnan(value) else value
