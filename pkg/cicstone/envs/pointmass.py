# -*- coding: utf-8 -*-
""" Pointmass Environment.

A point with 2-d position and velocity inside the arena [-1, 1]^2, pushed by a
force in [-1, 1]^2. Integration is semi-implicit Euler:

    v <- (1 - damping) v + force_scale a dt
    p <- clamp(p + v dt, arena)

and the velocity along an axis is zeroed when the point hits a wall on that axis.
In early-termination mode, entering the band of width `cliff_width` along any wall
ends the episode.
"""

from dataclasses import dataclass

import numpy as np

from .environment import EnvironmentABC, EnvSpec, StepResult

__all__ = ["PointmassState", "PointmassEnv", "pointmass_reset", "pointmass_step", "CORNERS"]

CORNERS = {
    "nw": np.array([-1.0, 1.0]),
    "ne": np.array([1.0, 1.0]),
    "sw": np.array([-1.0, -1.0]),
    "se": np.array([1.0, -1.0]),
}


@dataclass(frozen=True)
class PointmassState:
    position: np.ndarray
    velocity: np.ndarray
    step_index: int = 0

    @property
    def observation(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity])


def _reach(corner: str):
    target = CORNERS[corner]
    return lambda state: -float(np.linalg.norm(state.position - target))


_tasks = {
    "reach_nw": _reach("nw"),
    "reach_ne": _reach("ne"),
    "reach_sw": _reach("sw"),
    "reach_se": _reach("se"),
    "run_x": lambda state: float(state.velocity[0]),
}

DEFAULT_SPEC = EnvSpec(kind="pointmass", obs_dim=4, action_dim=2, task="reach_ne")


def pointmass_reset(seed: int, spec: EnvSpec = DEFAULT_SPEC) -> PointmassState:
    """ Sample a start state near the origin, at rest.

    :param seed: Seed of the start position draw.
    :param spec: Environment constants.
    :return: The initial state.
    """
    rng = np.random.Generator(np.random.Philox(int(seed)))
    position = rng.uniform(-spec.start_spread, spec.start_spread, size=2)
    return PointmassState(position=position, velocity=np.zeros(2), step_index=0)


def sanitize_action(action, action_dim: int) -> np.ndarray:
    action = np.nan_to_num(np.asarray(action, dtype=np.float64).reshape(-1), nan=0.0, posinf=1.0, neginf=-1.0)
    if action.shape[0] != action_dim:
        action = np.resize(action, action_dim)
    return np.clip(action, -1.0, 1.0)


def pointmass_step(state: PointmassState, action, spec: EnvSpec = DEFAULT_SPEC) -> tuple:
    """ Advance the pointmass by one step.

    :param state: Current state.
    :param action: Force in [-1, 1]^2; larger values are clamped.
    :param spec: Environment constants and task.
    :return: Tuple of (next state, StepResult).
    """
    action = sanitize_action(action, 2)
    velocity = (1.0 - spec.damping) * state.velocity + spec.force_scale * action * spec.dt
    position = state.position + velocity * spec.dt
    contact = np.abs(position) > 1.0
    position = np.clip(position, -1.0, 1.0)
    velocity = np.where(contact, 0.0, velocity)
    next_state = PointmassState(position=position, velocity=velocity, step_index=state.step_index + 1)
    failure = spec.termination_mode == "early" and bool(np.any(np.abs(position) > 1.0 - spec.cliff_width))
    reward = _tasks[spec.task or DEFAULT_SPEC.task](next_state)
    terminated = failure or next_state.step_index >= spec.episode_length
    return next_state, StepResult(next_obs=next_state.observation, extrinsic_reward=reward, terminated=terminated,
                                  step_index=next_state.step_index, failure=failure)


class PointmassEnv(EnvironmentABC):
    """ Pointmass Environment Class.

    """

    tasks = _tasks

    def __init__(self, spec: EnvSpec = DEFAULT_SPEC):
        super(PointmassEnv, self).__init__(spec)
        if spec.task != self.task:
            self.spec = EnvSpec(**dict(spec.__dict__, task=self.task))

    @classmethod
    def from_config(cls, section: dict):
        return cls(EnvSpec(
            kind="pointmass",
            obs_dim=4,
            action_dim=2,
            episode_length=section["episode_length"],
            termination_mode=section["termination"],
            task=section["task"],
            dt=section["dt"],
            damping=section["damping"],
            force_scale=section["force_scale"],
            start_spread=section["start_spread"],
            cliff_width=section["cliff_width"],
        ))

    def reset(self, seed: int) -> np.ndarray:
        self.state = pointmass_reset(seed, self.spec)
        return self.observation()

    def step(self, action) -> StepResult:
        self.state, result = pointmass_step(self.state, action, self.spec)
        return result

    def observation(self) -> np.ndarray:
        return self.state.observation

    def position(self) -> np.ndarray:
        return self.state.position.copy()

    def place(self, position, velocity=(0.0, 0.0)):
        """ Put the point at a given position and velocity, e.g. for flow-field sampling. """
        self.state = PointmassState(position=np.clip(np.asarray(position, dtype=np.float64), -1.0, 1.0),
                                    velocity=np.asarray(velocity, dtype=np.float64), step_index=0)
        return self.observation()

    def random_action(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, size=2)
