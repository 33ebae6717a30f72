# -*- coding: utf-8 -*-
""" Gridworld Environment.

A size x size grid (10 x 10 by default). The agent moves one cell per step, walls
block movement, and the episode has a fixed length. Actions are either a discrete
index (0 up, 1 down, 2 left, 3 right) or a 2-d continuous vector whose largest
component picks the direction, so the same world serves tabular and actor-critic
agents.

Observations are either one-hot vectors of length size^2 or the coordinates
(x, y) / size.
"""

from dataclasses import dataclass

import numpy as np

from cicstone.core.errors import ContractError

from .environment import EnvironmentABC, EnvSpec, StepResult

__all__ = ["GridState", "GridworldEnv", "gridworld_reset", "gridworld_step", "encode_cell", "coverage",
           "cell_coverage", "MOVES", "discretize_action"]

MOVES = {
    0: (0, 1),
    1: (0, -1),
    2: (-1, 0),
    3: (1, 0),
}
"""dict: Discrete action -> (dx, dy) for up, down, left and right."""

ACTION_NAMES = {"up": 0, "down": 1, "left": 2, "right": 3}


@dataclass(frozen=True)
class GridState:
    cell: tuple
    step_index: int = 0


DEFAULT_SPEC = EnvSpec(kind="gridworld", obs_dim=2, action_dim=2, episode_length=200, task="reach_corner")


def _reach_corner(state: GridState, size: int) -> float:
    return 1.0 if state.cell == (size - 1, size - 1) else 0.0


_tasks = {
    "reach_corner": _reach_corner,
}


def encode_cell(cell: tuple, size: int = 10, observation: str = "onehot") -> np.ndarray:
    x, y = cell
    if observation == "onehot":
        encoded = np.zeros(size * size)
        encoded[y * size + x] = 1.0
        return encoded
    return np.array([x / size, y / size], dtype=np.float64)


def discretize_action(action) -> int:
    """ Map a discrete index or a continuous 2-d vector onto one of the four moves. """
    if np.ndim(action) == 0:
        if isinstance(action, str):
            return ACTION_NAMES[action]
        return int(action)
    vector = np.nan_to_num(np.asarray(action, dtype=np.float64).reshape(-1)[:2])
    axis = int(np.argmax(np.abs(vector)))
    if axis == 0:
        return 3 if vector[0] >= 0.0 else 2
    return 0 if vector[1] >= 0.0 else 1


def gridworld_reset(seed: int, spec: EnvSpec = DEFAULT_SPEC) -> GridState:
    if not spec.random_start:
        return GridState(cell=(0, 0), step_index=0)
    rng = np.random.Generator(np.random.Philox(int(seed)))
    x, y = rng.integers(0, spec.grid_size, size=2)
    return GridState(cell=(int(x), int(y)), step_index=0)


def gridworld_step(state: GridState, action, spec: EnvSpec = DEFAULT_SPEC) -> tuple:
    """ Move one cell; moves into a wall leave the agent where it is.

    :param state: Current state.
    :param action: Discrete index, name or continuous 2-d vector.
    :param spec: Environment constants.
    :return: Tuple of (next state, StepResult).
    """
    move = discretize_action(action)
    if move not in MOVES:
        raise ContractError("Gridworld action must be one of {}, got {}".format(sorted(MOVES), action))
    size = spec.grid_size
    x, y = state.cell
    if not (0 <= x < size and 0 <= y < size):
        raise ContractError("Cell {} lies outside the {}x{} grid".format(state.cell, size, size))
    dx, dy = MOVES[move]
    cell = (min(max(x + dx, 0), size - 1), min(max(y + dy, 0), size - 1))
    next_state = GridState(cell=cell, step_index=state.step_index + 1)
    reward = _tasks[spec.task or DEFAULT_SPEC.task](next_state, size)
    return next_state, StepResult(next_obs=encode_cell(cell, size, spec.observation), extrinsic_reward=reward,
                                  terminated=next_state.step_index >= spec.episode_length,
                                  step_index=next_state.step_index, info={"cell": cell})


def coverage(observations, size: int = 10) -> float:
    """ Fraction of distinct cells among logged one-hot observations (0 for an empty log). """
    observations = np.asarray(observations, dtype=np.float64)
    if observations.size == 0:
        return 0.0
    observations = observations.reshape(-1, observations.shape[-1])
    if observations.shape[1] != size * size:
        raise ContractError("Observations have width {} but one-hot width {} was expected".format(
            observations.shape[1], size * size))
    is_binary = np.all((observations == 0.0) | (observations == 1.0))
    if not is_binary or not np.all(observations.sum(axis=1) == 1.0):
        raise ContractError("Coverage expects one-hot observations")
    return len(set(np.argmax(observations, axis=1).tolist())) / float(size * size)


def cell_coverage(cells, size: int = 10) -> float:
    cells = [tuple(int(c) for c in cell) for cell in cells]
    return len(set(cells)) / float(size * size)


class GridworldEnv(EnvironmentABC):
    """ Gridworld Environment Class.

    """

    tasks = _tasks

    def __init__(self, spec: EnvSpec = DEFAULT_SPEC):
        obs_dim = spec.grid_size ** 2 if spec.observation == "onehot" else 2
        if spec.obs_dim != obs_dim:
            spec = EnvSpec(**dict(spec.__dict__, obs_dim=obs_dim))
        super(GridworldEnv, self).__init__(spec)
        if spec.task != self.task:
            self.spec = EnvSpec(**dict(self.spec.__dict__, task=self.task))

    @classmethod
    def from_config(cls, section: dict):
        size = section["grid_size"]
        return cls(EnvSpec(
            kind="gridworld",
            obs_dim=size * size if section["observation"] == "onehot" else 2,
            action_dim=2,
            episode_length=section["episode_length"],
            termination_mode="fixed",
            task=section["task"],
            grid_size=size,
            observation=section["observation"],
            random_start=section["random_start"],
        ))

    def reset(self, seed: int) -> np.ndarray:
        self.state = gridworld_reset(seed, self.spec)
        return self.observation()

    def step(self, action) -> StepResult:
        self.state, result = gridworld_step(self.state, action, self.spec)
        return result

    def observation(self) -> np.ndarray:
        return encode_cell(self.state.cell, self.spec.grid_size, self.spec.observation)

    def position(self) -> np.ndarray:
        return np.array(self.state.cell, dtype=np.float64)

    def random_action(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, size=2)
