# -*- coding: utf-8 -*-
""" Studies.

Multi-run experiments built on the trainer: gridworld coverage of discrete versus
continuous skills, one-key ablations scored by zero-shot skill dispersion, the
fixed-length versus early-termination comparison, the from-scratch expert reference
used for score normalization, and the behavioural flow field of a pointmass policy.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from cicstone.core.config import ConfigFile
from cicstone.core.errors import ConfigurationError, ReplayNotReady
from cicstone.core.rng import RandomStreams
from cicstone.core.utils import display, dumps_line
from cicstone.envs import make_environment
from cicstone.envs.gridworld import cell_coverage
from cicstone.envs.pointmass import PointmassEnv
from cicstone.control.agents import AgentABC
from cicstone.control.baselines import FixedAgent
from cicstone.control.replay import ReplayBuffer
from cicstone.control.trainer import Collector, evaluate, pretrain, skill_dispersion

__all__ = ["GRIDWORLD_COLUMNS", "ABLATION_COLUMNS", "TERMINATION_COLUMNS", "EXPERT_COLUMNS", "run_parallel",
           "skill_coverage", "coverage_skills", "gridworld_study", "zero_shot_dispersion", "ablation_study",
           "termination_study", "expert_reference", "flow_field"]

GRIDWORLD_COLUMNS = ("agent", "K", "seed", "steps", "coverage")
ABLATION_COLUMNS = ("key", "value", "seed", "dispersion")
TERMINATION_COLUMNS = ("mode", "agent", "seed", "steps", "episode_return", "episode_length")
EXPERT_COLUMNS = ("env", "task", "expert", "floor")

DISPERSION_SKILLS = 16
COVERAGE_SKILLS = 16


def run_parallel(function, jobs: list, workers: int = 1) -> list:
    """ Map a function over independent jobs, keeping the job order in the results. """
    if workers <= 1:
        return [function(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: function(*job), jobs))


def _switch_env(config: ConfigFile, kind: str, *overrides: str) -> ConfigFile:
    """ Copy of a config on another environment kind; the task falls back to that kind's default. """
    reset = () if config["env"]["kind"] == kind else ("env.task=",)
    return config.copy_with("env.kind={}".format(kind), *reset, *overrides)


def skill_coverage(agent: AgentABC, env, skills: list, seed: int = 0) -> float:
    """ Fraction of cells visited by one deterministic episode per skill, start cells included.

    :param agent: Pretrained agent.
    :param env: Gridworld environment.
    :param skills: Skills rolled out; every episode resets with the same seed.
    :param seed: Reset seed.
    :return: Distinct visited cells over the number of cells.
    """
    cells = []
    for skill in skills:
        obs = env.reset(seed)
        cells.append(env.position())
        terminated = False
        while not terminated:
            result = env.step(agent.act(obs, skill))
            cells.append(env.position())
            obs, terminated = result.next_obs, result.terminated
    return cell_coverage(cells, env.spec.grid_size)


def coverage_skills(agent: AgentABC, seed: int, count: int = COVERAGE_SKILLS) -> list:
    """ Every discrete skill of a DIAYN agent, or `count` draws from a continuous skill prior. """
    if agent.kind == "diayn":
        return [skill for _, skill in agent.sweep_candidates([])]
    rng = RandomStreams(seed).stream("coverage.skill")
    return [agent.sample_skill(rng) for _ in range(count)]


def _gridworld_run(config: ConfigFile, label: str, k: int, seed: int, steps: int, count: int) -> dict:
    result = pretrain(config)
    skills = coverage_skills(result.agent, seed, count)
    coverage = skill_coverage(result.agent, result.env, skills, RandomStreams(seed).child_seed("coverage.env"))
    display("gridworld {} K={} seed {}: coverage {:.2f}".format(label, k, seed, coverage))
    return {"agent": label, "K": k, "seed": seed, "steps": steps, "coverage": coverage}


def gridworld_study(config: ConfigFile, ks: list = (4,), seeds: list = (1, 2, 3, 4, 5), steps: int = None,
                    workers: int = 1, count: int = COVERAGE_SKILLS) -> list:
    """ Coverage of the greedy skill policies after pretraining, for CIC and DIAYN with K skills.

    DIAYN rolls each of its K one-hot skills once; CIC rolls `count` skills drawn from
    its uniform prior. Exploration noise and the seed-frame walk are not counted.

    :param config: Base configuration; env and agent kinds are overridden.
    :param ks: DIAYN skill counts.
    :param seeds: Seeds.
    :param steps: Pretraining steps per run; defaults to [train] num_pretrain_steps.
    :param workers: Number of runs executed concurrently.
    :param count: Skills rolled out for the CIC agent.
    :return: Rows with the GRIDWORLD_COLUMNS keys.
    """
    steps = config["train"]["num_pretrain_steps"] if steps is None else steps
    base = _switch_env(config, "gridworld", "train.num_pretrain_steps={}".format(steps))
    jobs = []
    for seed in seeds:
        cic = base.copy_with("env.observation=coords", "agent.kind=cic", "train.seed={}".format(seed))
        jobs.append((cic, "cic", cic["agent"]["skill_dim"], seed, steps, count))
        for k in ks:
            diayn = base.copy_with("agent.kind=diayn", "env.observation=onehot", "agent.diayn_skills={}".format(k),
                                   "train.seed={}".format(seed))
            jobs.append((diayn, "diayn", k, seed, steps, count))
    return run_parallel(_gridworld_run, jobs, workers)


def zero_shot_dispersion(agent: AgentABC, env, seed: int, count: int = DISPERSION_SKILLS) -> float:
    """ Dispersion of episode-final positions over randomly sampled skills. """
    streams = RandomStreams(seed)
    rng = streams.stream("dispersion.skill")
    skills = [agent.sample_skill(rng) for _ in range(count)]
    return skill_dispersion(agent, env, skills, streams.child_seed("dispersion.env"))


def _ablation_run(config: ConfigFile, key: str, value: str, seed: int) -> dict:
    result = pretrain(config)
    dispersion = zero_shot_dispersion(result.agent, result.env, seed)
    display("{}={} seed {}: dispersion {:.4f}".format(key, value, seed, dispersion))
    return {"key": key, "value": value, "seed": seed, "dispersion": dispersion}


def ablation_study(config: ConfigFile, key: str, values: list, seeds: list = (1, 2, 3, 4, 5),
                   workers: int = 1) -> list:
    """ Pretrain once per (value, seed) of a dotted config key and measure zero-shot dispersion. """
    jobs = [(config.copy_with("{}={}".format(key, value), "train.seed={}".format(seed)), key, str(value), seed)
            for value in values for seed in seeds]
    return run_parallel(_ablation_run, jobs, workers)


def _termination_run(config: ConfigFile, mode: str, agent: str, seed: int) -> dict:
    result = pretrain(config)
    episodes = result.episodes
    steps = config["train"]["num_pretrain_steps"]
    return {
        "mode": mode,
        "agent": agent,
        "seed": seed,
        "steps": steps,
        "episode_return": float(np.mean([e["return"] for e in episodes])) if episodes else 0.0,
        "episode_length": float(np.mean([e["length"] for e in episodes])) if episodes else float(steps),
    }


def termination_study(config: ConfigFile, modes: list = ("fixed", "early"), agents: list = ("cic", "diayn", "fixed"),
                      seeds: list = (1, 2, 3, 4, 5), workers: int = 1) -> list:
    """ Extrinsic return and episode length observed during reward-free pointmass pretraining. """
    jobs = []
    for mode in modes:
        for agent in agents:
            for seed in seeds:
                run = _switch_env(config, "pointmass", "env.termination={}".format(mode),
                                  "agent.kind={}".format(agent), "train.seed={}".format(seed))
                jobs.append((run, mode, agent, seed))
    return run_parallel(_termination_run, jobs, workers)


def expert_reference(config: ConfigFile, task: str = None) -> dict:
    """ Return of a skill-free actor-critic trained from scratch on the extrinsic task.

    The budget is expert_multiplier times the finetune budget. `floor` is the return of
    the same actor-critic before any update.
    """
    train, agent_section = config["train"], config["agent"]
    env = make_environment(config["env"], task)
    streams = RandomStreams(train["seed"])
    agent = FixedAgent(config, env.spec, streams)
    no_skill = np.zeros(0)
    eval_seed = streams.child_seed("expert.eval")
    floor, _ = evaluate(agent, env, no_skill, train["eval_episodes"], eval_seed)
    replay = ReplayBuffer(env.spec.obs_dim, env.spec.action_dim, 0, train["replay_capacity"])
    collector = Collector(env, replay, streams, "expert")
    action_rng = streams.stream("expert.random_action")
    explore_rng = streams.stream("expert.explore")
    replay_rng = streams.stream("expert.replay")
    budget = train["expert_multiplier"] * train["num_finetune_steps"]
    for step in range(budget):
        if step < train["seed_frames"]:
            collector.step(env.random_action(action_rng), no_skill)
            continue
        collector.step(agent.act(collector.obs, no_skill, explore_rng, explore=True), no_skill)
        if (step + 1 - train["seed_frames"]) % agent_section["update_every"] == 0:
            try:
                batch = replay.sample_batch(replay_rng, agent_section["batch_size"], agent_section["nstep"],
                                            agent_section["discount"])
            except ReplayNotReady:
                continue
            agent.finetune_update(batch, step=step + 1)
    expert, _ = evaluate(agent, env, no_skill, train["eval_episodes"], eval_seed)
    display("expert {} {}: {:.3f} (floor {:.3f})".format(env.spec.kind, env.task, expert, floor))
    return {"env": env.spec.kind, "task": env.task, "expert": expert, "floor": floor}


def flow_field(agent: AgentABC, env, values: list, grid: int = 9, horizon: int = 10, dump_path: str = None) -> list:
    """ Mean per-step displacement of the deterministic policy from a grid of start points.

    :param agent: Agent acting on a pointmass.
    :param env: Pointmass environment.
    :param values: Sweep values; the agent maps them to skills.
    :param grid: Number of start points per axis.
    :param horizon: Steps rolled from every start point.
    :param dump_path: Optional JSON-lines dump of every rolled position.
    :return: One panel per skill: {"value", "arrows": [(x, y, dx, dy), ...]}.
    """
    if not isinstance(env, PointmassEnv):
        raise ConfigurationError("Flow fields are only defined for the pointmass environment")
    if grid < 2 or horizon < 1:
        raise ConfigurationError("Flow fields need grid >= 2 and horizon >= 1")
    axis = np.linspace(-0.9, 0.9, grid)
    panels = []
    dump = open(dump_path, "w", encoding="utf-8") if dump_path is not None else None
    try:
        for panel, (value, skill) in enumerate(agent.sweep_candidates(list(values))):
            arrows = []
            for y in axis[::-1]:
                for x in axis:
                    obs = env.place((x, y))
                    start = env.position()
                    for step in range(horizon):
                        obs = env.step(agent.act(obs, skill)).next_obs
                        if dump is not None:
                            dump.write(dumps_line({"panel": panel, "start": [float(x), float(y)], "step": step + 1,
                                                   "position": [float(p) for p in env.position()]}))
                    dx, dy = (env.position() - start) / horizon
                    arrows.append((float(x), float(y), float(dx), float(dy)))
            panels.append({"value": float(value), "arrows": arrows})
    finally:
        if dump is not None:
            dump.close()
    return panels
