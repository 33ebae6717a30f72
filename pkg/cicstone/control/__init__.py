# -*- coding: utf-8 -*-
""" Control Subpackage.

"""

from cicstone.core.errors import ConfigurationError
from cicstone.core.rng import RandomStreams
from cicstone.envs.environment import EnvSpec
from cicstone.control.agents import AgentABC, CicAgent
from cicstone.control.baselines import FixedAgent, apt_agent, diayn_agent

supported_agents = {
    "cic": CicAgent,
    "apt": apt_agent,
    "diayn": diayn_agent,
    "fixed": FixedAgent
}


def build_agent(config: dict, env_spec: EnvSpec, streams: RandomStreams) -> AgentABC:
    """ Build the agent named by [agent] kind, initialized from the 'init' stream. """
    kind = config["agent"]["kind"]
    if kind not in supported_agents:
        raise ConfigurationError("Unknown agent '{}'. Allowed: {}".format(kind, ", ".join(supported_agents)))
    return supported_agents[kind](config, env_spec, streams)
