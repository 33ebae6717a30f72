# -*- coding: utf-8 -*-
""" Trainer.

Runs the two parts of a skill-discovery experiment:

1. pretrain: reward-free interaction. The skill is resampled every skill_period
   steps, the first seed_frames actions are uniform random, and after that the
   agent is updated every update_every steps from replay batches. The extrinsic
   reward is stored but never read by an update.
2. finetune: the skill is fixed by a grid sweep (or drawn at random), random actions
   fill the replay buffer until seed_frames interactions have been spent, then the
   actor-critic is trained on the extrinsic reward with the skill frozen.

Every run draws its randomness from named streams of one seed, so a fixed seed
reproduces checkpoints and logs byte for byte.
"""

import hashlib
import os
from dataclasses import dataclass, field

import numpy as np

from cicstone import __version__
from cicstone.core.checkpoint import Checkpoint, save_checkpoint
from cicstone.core.config import ConfigFile, sweep_candidates
from cicstone.core.errors import ConfigurationError, ReplayNotReady, TrainingError
from cicstone.core.nn import INIT_SCHEME
from cicstone.core.rng import RandomStreams
from cicstone.core.utils import TerminalColors, display, dumps_line
from cicstone.envs import make_environment
from cicstone.envs.environment import EnvironmentABC
from cicstone.control import build_agent
from cicstone.control.agents import AgentABC
from cicstone.control.replay import ReplayBuffer, ReplayRecord

__all__ = ["TrainLog", "PretrainResult", "SweepResult", "FinetuneResult", "make_checkpoint", "restore_agent",
           "pretrain", "skill_grid_sweep", "finetune", "evaluate", "skill_dispersion", "Collector", "run_directory"]


class TrainLog:
    """ JSON-lines log of training events with non-decreasing step indices.

    :param path: Optional file the records are streamed to; truncated on creation.
    """

    def __init__(self, path: str = None):
        self.path = path
        self.records = []
        self._last_step = 0
        if path is not None:
            open(path, "w", encoding="utf-8").close()

    def write(self, record: dict):
        step = record.get("step", self._last_step)
        if step < self._last_step:
            raise ValueError("Log step {} goes back from {}".format(step, self._last_step))
        self._last_step = step
        self.records.append(record)
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(dumps_line(record))

    def lines(self) -> str:
        return "".join(dumps_line(record) for record in self.records)

    def digest(self) -> str:
        return hashlib.blake2b(self.lines().encode("utf-8"), digest_size=16).hexdigest()


class Collector:
    """ Steps an environment, pushes every transition into a replay buffer and resets
    finished episodes with seeds from a named stream.

    :param env: Environment.
    :param replay: Buffer receiving the transitions.
    :param streams: Random streams of the run.
    :param prefix: Stream name prefix of this phase.
    :param track_positions: Whether to record the agent position after every step.
    """

    def __init__(self, env: EnvironmentABC, replay: ReplayBuffer, streams: RandomStreams, prefix: str,
                 track_positions: bool = False):
        self.env = env
        self.replay = replay
        self.streams = streams
        self.prefix = prefix
        self.episode = 0
        self.interactions = 0
        self.episode_return = 0.0
        self.episodes = []
        self.positions = [] if track_positions else None
        self.obs = self._reset()

    def _reset(self) -> np.ndarray:
        obs = self.env.reset(self.streams.child_seed(self.prefix + ".env", self.episode))
        if self.positions is not None:
            self.positions.append(self.env.position())
        return obs

    def step(self, action, skill):
        result = self.env.step(action)
        self.replay.push(ReplayRecord(obs=self.obs, action=np.reshape(action, -1), ext_reward=result.extrinsic_reward,
                                      next_obs=result.next_obs, skill=skill, episode=self.episode,
                                      step=result.step_index - 1, failure=result.failure))
        self.interactions += 1
        self.episode_return += result.extrinsic_reward
        if self.positions is not None:
            self.positions.append(self.env.position())
        if result.terminated:
            self.episodes.append({"episode": self.episode, "return": float(self.episode_return),
                                  "length": int(result.step_index), "failure": bool(result.failure)})
            self.episode += 1
            self.episode_return = 0.0
            self.obs = self._reset()
        else:
            self.obs = result.next_obs
        return result


@dataclass
class PretrainResult:
    agent: AgentABC
    env: EnvironmentABC
    checkpoint: Checkpoint
    log: TrainLog
    updates: int = 0
    episodes: list = field(default_factory=list)
    positions: np.ndarray = None


@dataclass
class SweepResult:
    value: float
    skill: np.ndarray
    returns: list
    steps: int


@dataclass
class FinetuneResult:
    agent: AgentABC
    checkpoint: Checkpoint
    skill: np.ndarray
    score: float
    returns: list
    zero_shot: float
    interactions: int
    updates: int = 0
    sweep: SweepResult = None
    log: TrainLog = None


def make_checkpoint(config: ConfigFile, agent: AgentABC, env: EnvironmentABC, phase: str, step: int,
                    skill=None) -> Checkpoint:
    metadata = {
        "agent": config["agent"]["kind"],
        "env": env.spec.kind,
        "task": env.task,
        "phase": phase,
        "step": int(step),
        "skill": None if skill is None else [float(value) for value in np.reshape(skill, -1)],
        "init_scheme": INIT_SCHEME,
        "version": __version__,
    }
    return Checkpoint(config.render(), metadata, agent.arrays())


def restore_agent(checkpoint: Checkpoint, overrides: list = ()) -> tuple:
    """ Rebuild the agent stored in a checkpoint.

    :param checkpoint: Decoded checkpoint.
    :param overrides: 'section.key=value' overrides applied to its config echo.
    :return: Tuple of (config, agent).
    """
    config = ConfigFile.parse(checkpoint.config_text, source="<checkpoint>", overrides=overrides)
    if checkpoint.metadata["agent"] is not None and checkpoint.metadata["agent"] != config["agent"]["kind"]:
        raise ConfigurationError("Checkpoint holds a '{}' agent but the config asks for '{}'".format(
            checkpoint.metadata["agent"], config["agent"]["kind"]))
    env = make_environment(config["env"])
    agent = build_agent(config, env.spec, RandomStreams(config["train"]["seed"]))
    agent.load_arrays(checkpoint.arrays)
    return config, agent


def _skill_record(skill) -> list:
    return [float(value) for value in np.reshape(skill, -1)]


def pretrain(config: ConfigFile, env: EnvironmentABC = None, log_path: str = None, checkpoint_path: str = None,
             track_positions: bool = False) -> PretrainResult:
    """ Reward-free pretraining.

    :param config: Resolved configuration.
    :param env: Environment to use instead of the one the config describes.
    :param log_path: Optional JSON-lines log file.
    :param checkpoint_path: Optional checkpoint file, also written when training aborts.
    :param track_positions: Whether to keep every visited position in the result.
    :return: The trained agent, its checkpoint and the log.
    """
    agent_section, train = config["agent"], config["train"]
    streams = RandomStreams(train["seed"])
    env = env or make_environment(config["env"])
    agent = build_agent(config, env.spec, streams)
    replay = ReplayBuffer(env.spec.obs_dim, env.spec.action_dim, agent.skill_dim, train["replay_capacity"])
    collector = Collector(env, replay, streams, "pretrain", track_positions)
    action_rng = streams.stream("pretrain.random_action")
    explore_rng = streams.stream("pretrain.explore")
    skill_rng = streams.stream("pretrain.skill")
    replay_rng = streams.stream("pretrain.replay")
    log = TrainLog(log_path)
    steps, seed_frames = train["num_pretrain_steps"], train["seed_frames"]
    skill = agent.sample_skill(skill_rng)
    metrics, updates = {}, 0
    display(TerminalColors.HEADER + "Pretraining {} on {} for {} steps".format(
        config["agent"]["kind"], env.spec.kind, steps) + TerminalColors.ENDC)
    for step in range(steps):
        if step > 0 and step % agent_section["skill_period"] == 0:
            skill = agent.sample_skill(skill_rng)
        if step < seed_frames:
            action = env.random_action(action_rng)
        else:
            action = agent.act(collector.obs, skill, explore_rng, explore=True)
        finished = len(collector.episodes)
        collector.step(action, skill)
        for record in collector.episodes[finished:]:
            log.write(dict(record, event="episode", step=step + 1))
        steps_past = step + 1 - seed_frames
        if steps_past > 0 and steps_past % agent_section["update_every"] == 0:
            try:
                batch = replay.sample_batch(replay_rng, agent_section["batch_size"], agent_section["nstep"],
                                            agent_section["discount"])
            except ReplayNotReady:
                batch = None
            if batch is not None:
                try:
                    metrics = agent.update(batch, step=step + 1)
                except TrainingError as e:
                    log.write({"event": "abort", "step": step + 1, "error": str(e)})
                    if checkpoint_path is not None:
                        save_checkpoint(checkpoint_path, make_checkpoint(config, agent, env, "pretrain", step))
                    raise
                updates += 1
        if (step + 1) % train["log_every"] == 0 or step + 1 == steps:
            log.write(dict({key: float(value) for key, value in metrics.items()}, event="step", step=step + 1,
                           updates=updates, skill=_skill_record(skill)))
            display("step {} updates {} {}".format(step + 1, updates, metrics))
    checkpoint = make_checkpoint(config, agent, env, "pretrain", steps)
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, checkpoint)
    positions = None if collector.positions is None else np.array(collector.positions)
    return PretrainResult(agent=agent, env=env, checkpoint=checkpoint, log=log, updates=updates,
                          episodes=collector.episodes, positions=positions)


def skill_grid_sweep(agent: AgentABC, env: EnvironmentABC, sweep_step: float = 0.1, window: int = 100,
                     seed: int = 0) -> SweepResult:
    """ Pick the constant skill with the largest extrinsic return.

    Each candidate rolls the deterministic policy for `window` steps from the same
    start (episodes that end inside a window restart from it). Ties go to the
    earlier, i.e. smaller, candidate.

    :param agent: Pretrained agent.
    :param env: Environment carrying the extrinsic task.
    :param sweep_step: Grid step over [0, 1].
    :param window: Steps per candidate.
    :param seed: Reset seed shared by every candidate.
    :return: The chosen value and skill with every candidate's return.
    """
    candidates = agent.sweep_candidates(sweep_candidates(sweep_step))
    returns = []
    for value, skill in candidates:
        obs = env.reset(seed)
        total = 0.0
        for _ in range(window):
            result = env.step(agent.act(obs, skill))
            total += result.extrinsic_reward
            obs = env.reset(seed) if result.terminated else result.next_obs
        returns.append(total)
    best = 0
    for index, total in enumerate(returns):
        if total > returns[best]:
            best = index
    display("sweep returns {} -> v = {}".format(["{:.3f}".format(total) for total in returns], candidates[best][0]))
    return SweepResult(value=candidates[best][0], skill=candidates[best][1], returns=returns,
                       steps=window * len(candidates))


def evaluate(agent: AgentABC, env: EnvironmentABC, skill, episodes: int = 5, seed: int = 0,
             dump_path: str = None) -> tuple:
    """ Deterministic rollouts of the policy with a fixed skill.

    :param agent: Agent.
    :param env: Environment carrying the task.
    :param skill: Skill held fixed for every episode.
    :param episodes: Number of episodes.
    :param seed: Seed of the episode start draws.
    :param dump_path: Optional JSON-lines trajectory dump.
    :return: Tuple of (mean return, per-episode returns).
    """
    if episodes < 1:
        raise ConfigurationError("Evaluation needs at least one episode")
    streams = RandomStreams(seed)
    returns = []
    dump = open(dump_path, "w", encoding="utf-8") if dump_path is not None else None
    try:
        for episode in range(episodes):
            obs = env.reset(streams.child_seed("eval.env", episode))
            total, terminated = 0.0, False
            while not terminated:
                action = agent.act(obs, skill)
                result = env.step(action)
                total += result.extrinsic_reward
                if dump is not None:
                    dump.write(dumps_line({"episode": episode, "step": result.step_index, "obs": _skill_record(obs),
                                           "action": _skill_record(action), "reward": result.extrinsic_reward,
                                           "skill": _skill_record(skill)}))
                obs, terminated = result.next_obs, result.terminated
            returns.append(total)
    finally:
        if dump is not None:
            dump.close()
    return float(np.mean(returns)), returns


def finetune(checkpoint: Checkpoint, task: str = None, overrides: list = (), log_path: str = None) -> FinetuneResult:
    """ Adapt a pretrained agent to an extrinsic task and score it.

    Step accounting over the budget N = num_finetune_steps with S = seed_frames and
    C sweep candidates: the sweep spends C * min(sweep_period, S // C) steps, random
    actions fill the buffer until S steps are spent, and N - S steps train the
    actor-critic on the extrinsic reward with the skill frozen.

    :param checkpoint: Pretrained checkpoint.
    :param task: Task id; defaults to the task in the config echo.
    :param overrides: 'section.key=value' overrides.
    :param log_path: Optional JSON-lines log file.
    :return: The finetuned agent, its checkpoint and its evaluation score.
    """
    config, agent = restore_agent(checkpoint, overrides)
    agent_section, train = config["agent"], config["train"]
    env = make_environment(config["env"], task)
    streams = RandomStreams(train["seed"])
    log = TrainLog(log_path)
    budget, seed_frames = train["num_finetune_steps"], train["seed_frames"]
    sweep = None
    if train["adaptation"] == "grid_sweep":
        count = len(agent.sweep_candidates(sweep_candidates(train["sweep_step"])))
        window = min(train["sweep_period"], seed_frames // count)
        sweep = skill_grid_sweep(agent, env, train["sweep_step"], window, streams.child_seed("finetune.sweep"))
        skill, spent = sweep.skill, sweep.steps
        log.write({"event": "sweep", "step": spent, "value": float(sweep.value),
                   "returns": [float(total) for total in sweep.returns]})
    else:
        skill, spent = agent.sample_skill(streams.stream("finetune.adapt")), 0
        log.write({"event": "adapt", "step": 0, "skill": _skill_record(skill)})
    zero_shot, _ = evaluate(agent, env, skill, train["eval_episodes"], streams.child_seed("finetune.eval"))
    replay = ReplayBuffer(env.spec.obs_dim, env.spec.action_dim, agent.skill_dim, train["replay_capacity"])
    collector = Collector(env, replay, streams, "finetune")
    action_rng = streams.stream("finetune.random_action")
    explore_rng = streams.stream("finetune.explore")
    replay_rng = streams.stream("finetune.replay")
    for _ in range(seed_frames - spent):
        collector.step(env.random_action(action_rng), skill)
    metrics, updates = {}, 0
    for step in range(budget - seed_frames):
        collector.step(agent.act(collector.obs, skill, explore_rng, explore=True), skill)
        if (step + 1) % agent_section["update_every"] == 0:
            try:
                batch = replay.sample_batch(replay_rng, agent_section["batch_size"], agent_section["nstep"],
                                            agent_section["discount"])
            except ReplayNotReady:
                batch = None
            if batch is not None:
                metrics = agent.finetune_update(batch, step=seed_frames + step + 1)
                updates += 1
        if (step + 1) % train["log_every"] == 0:
            log.write(dict({key: float(value) for key, value in metrics.items()}, event="step",
                           step=seed_frames + step + 1, updates=updates))
    interactions = spent + collector.interactions
    score, returns = evaluate(agent, env, skill, train["eval_episodes"], streams.child_seed("finetune.eval"))
    log.write({"event": "score", "step": interactions, "score": score, "zero_shot": zero_shot})
    display(TerminalColors.OKGREEN + "{} {}: zero-shot {:.3f}, finetuned {:.3f}".format(
        env.spec.kind, env.task, zero_shot, score) + TerminalColors.ENDC)
    finetuned = make_checkpoint(config, agent, env, "finetune", interactions, skill)
    return FinetuneResult(agent=agent, checkpoint=finetuned, skill=skill, score=score, returns=returns,
                          zero_shot=zero_shot, interactions=interactions, updates=updates, sweep=sweep, log=log)


def skill_dispersion(agent: AgentABC, env: EnvironmentABC, skills: list, seed: int = 0) -> float:
    """ Root mean squared distance of episode-final positions to their centroid, one episode per skill. """
    finals = []
    for skill in skills:
        obs = env.reset(seed)
        terminated = False
        while not terminated:
            result = env.step(agent.act(obs, skill))
            obs, terminated = result.next_obs, result.terminated
        finals.append(env.position())
    finals = np.array(finals)
    return float(np.sqrt(np.mean(np.sum((finals - finals.mean(axis=0)) ** 2, axis=1))))


def run_directory(config: ConfigFile, root: str) -> str:
    """ `{root}/{env}-{agent}-seed{seed}`, created if missing. """
    path = os.path.join(root, "{}-{}-seed{}".format(config["env"]["kind"], config["agent"]["kind"],
                                                     config["train"]["seed"]))
    os.makedirs(path, exist_ok=True)
    return path
