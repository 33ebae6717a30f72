# -*- coding: utf-8 -*-
""" Environments Subpackage.

"""

from cicstone.core.errors import ConfigurationError
from cicstone.envs.environment import EnvironmentABC, EnvSpec, StepResult
from cicstone.envs.gridworld import GridworldEnv
from cicstone.envs.pointmass import PointmassEnv

supported_environments = {
    "pointmass": PointmassEnv,
    "gridworld": GridworldEnv
}


def make_environment(section: dict, task: str = None) -> EnvironmentABC:
    """ Build the environment described by the [env] section of a config.

    :param section: Resolved [env] section.
    :param task: Optional task id overriding the section's task.
    :return: A new environment (not yet reset).
    """
    kind = section["kind"]
    if kind not in supported_environments:
        raise ConfigurationError("Unknown environment '{}'. Allowed: {}".format(
            kind, ", ".join(supported_environments)))
    environment = supported_environments[kind].from_config(section)
    return environment if task is None else environment.with_task(task)
