# -*- coding: utf-8 -*-
""" Environment Implementation Module.

An environment is a deterministic toy world an agent acts in. Episodes either run for
a fixed number of steps (the DeepMind Control convention) or may end early when the
agent enters a failure region (the Gym convention). Environment state is a plain value:
stepping returns a new state and never mutates shared data.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from cicstone.core.errors import ConfigurationError

__all__ = ["EnvSpec", "StepResult", "EnvironmentABC", "TERMINATION_MODES"]

TERMINATION_MODES = ("fixed", "early")


@dataclass(frozen=True)
class EnvSpec:
    """ Static description of an environment instance. """

    kind: str
    obs_dim: int
    action_dim: int
    episode_length: int = 200
    termination_mode: str = "fixed"
    task: str = ""
    dt: float = 0.05
    damping: float = 0.05
    force_scale: float = 1.0
    start_spread: float = 0.1
    cliff_width: float = 0.1
    grid_size: int = 10
    observation: str = "coords"
    random_start: bool = False

    def __post_init__(self):
        if self.episode_length < 1:
            raise ConfigurationError("episode_length must be at least 1, got {}".format(self.episode_length))
        if self.obs_dim < 1 or self.action_dim < 1:
            raise ConfigurationError("obs_dim and action_dim must be at least 1")
        if self.termination_mode not in TERMINATION_MODES:
            raise ConfigurationError("Unknown termination mode '{}'. Allowed: {}".format(
                self.termination_mode, ", ".join(TERMINATION_MODES)))


@dataclass(frozen=True)
class StepResult:
    """ Outcome of one environment step.

    `terminated` marks the end of the episode for any reason; `failure` is only set when
    the episode ended early, which is the one case where bootstrapping must stop.
    """

    next_obs: np.ndarray
    extrinsic_reward: float
    terminated: bool
    step_index: int
    failure: bool = False
    info: dict = field(default_factory=dict)


class EnvironmentABC(ABC):
    """ Environment Abstract Base Class.

    """

    tasks: dict = None
    """dict: Task id -> reward function of the environment state."""

    def __init__(self, spec: EnvSpec):
        assert self.tasks is not None, \
            "Tasks for environment have not been defined."
        task = spec.task or next(iter(self.tasks))
        if task not in self.tasks:
            raise ConfigurationError("Unknown task '{}' for environment '{}'. Valid tasks: {}".format(
                task, spec.kind, ", ".join(self.tasks)))
        self.spec = spec
        self.task = task
        self.state = None

    @classmethod
    @abstractmethod
    def from_config(cls, section: dict):
        pass

    @abstractmethod
    def reset(self, seed: int) -> np.ndarray:
        pass

    @abstractmethod
    def step(self, action) -> StepResult:
        pass

    @abstractmethod
    def observation(self) -> np.ndarray:
        pass

    @abstractmethod
    def position(self) -> np.ndarray:
        """Location of the agent in the arena, used for dispersion and coverage."""
        pass

    @abstractmethod
    def random_action(self, rng: np.random.Generator) -> np.ndarray:
        pass

    def set_state(self, state):
        self.state = state

    def with_task(self, task: str):
        """ A fresh environment of the same kind with another task. """
        return type(self)(_replace_task(self.spec, task))


def _replace_task(spec: EnvSpec, task: str) -> EnvSpec:
    values = dict(spec.__dict__)
    values["task"] = task
    return EnvSpec(**values)
