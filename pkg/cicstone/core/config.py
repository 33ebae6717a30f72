# -*- coding: utf-8 -*-
""" Run Configuration.

A run is configured with a small line-based file made of sections of
`key = value` pairs:

    [env]
    kind = pointmass
    task = reach_ne

    [train]
    seed = 3

Every key belongs to exactly one section of the schema below, unknown keys are
errors, and command-line overrides of the form `section.key=value` win over file
values. `ConfigFile.render()` echoes the fully resolved configuration; parsing the
echo gives back the same values.
"""

import os
from collections import namedtuple

from cicstone.core.errors import ConfigurationError
from cicstone.core.utils import split_route

__all__ = ["ConfigFile", "schema", "RUN_DIR_VARIABLE", "run_root", "sweep_candidates"]

RUN_DIR_VARIABLE = "CIC_RUN_DIR"

_Option = namedtuple("_Option", ["kind", "default", "choices"])

_REQUIRED = object()


def _option(kind, default, choices=None) -> _Option:
    return _Option(kind, default, choices)


schema = {
    "env": {
        "kind": _option(str, _REQUIRED, ("pointmass", "gridworld")),
        "task": _option(str, ""),
        "episode_length": _option(int, 200),
        "termination": _option(str, "fixed", ("fixed", "early")),
        "dt": _option(float, 0.05),
        "damping": _option(float, 0.05),
        "force_scale": _option(float, 1.0),
        "start_spread": _option(float, 0.1),
        "cliff_width": _option(float, 0.1),
        "grid_size": _option(int, 10),
        "observation": _option(str, "coords", ("coords", "onehot")),
        "random_start": _option(bool, False),
    },
    "agent": {
        "kind": _option(str, "cic", ("cic", "apt", "diayn", "fixed")),
        "hidden_dim": _option(int, 128),
        "skill_dim": _option(int, 16),
        "embed_dim": _option(int, 16),
        "temperature": _option(float, 0.5),
        "variant": _option(str, "entropy", ("entropy", "discriminator", "similarity", "uncertainty")),
        "ensemble_size": _option(int, 4),
        "prediction_head": _option(bool, True),
        "cic_loss": _option(bool, True),
        "skill_period": _option(int, 50),
        "knn_k": _option(int, 12),
        "entropy_form": _option(str, "log1p_mean", ("log1p_mean", "literal")),
        "reward_normalization": _option(bool, True),
        "lr": _option(float, 1e-4),
        "stddev": _option(float, 0.2),
        "stddev_clip": _option(float, 0.3),
        "critic_tau": _option(float, 0.01),
        "discount": _option(float, 0.99),
        "nstep": _option(int, 3),
        "batch_size": _option(int, 256),
        "update_every": _option(int, 2),
        "diayn_skills": _option(int, 4),
        "tabular_lr": _option(float, 0.1),
        "tabular_epsilon": _option(float, 0.1),
    },
    "train": {
        "seed": _option(int, 1),
        "num_pretrain_steps": _option(int, 50000),
        "num_finetune_steps": _option(int, 10000),
        "seed_frames": _option(int, 1000),
        "sweep_step": _option(float, 0.1),
        "sweep_period": _option(int, 100),
        "adaptation": _option(str, "grid_sweep", ("grid_sweep", "random")),
        "eval_episodes": _option(int, 5),
        "replay_capacity": _option(int, 100000),
        "log_every": _option(int, 1000),
        "expert_multiplier": _option(int, 10),
    },
    "stats": {
        "resamples": _option(int, 2000),
        "level": _option(float, 0.95),
        "seeds": _option(int, 5),
    },
}
"""dict: Section -> key -> option. Defaults are the desk-scale values."""

_true_values = {"true", "yes", "on", "1"}
_false_values = {"false", "no", "off", "0"}


def _convert(section: str, key: str, raw: str):
    option = schema[section][key]
    text = raw.strip()
    try:
        if option.kind is bool:
            if text.lower() in _true_values:
                value = True
            elif text.lower() in _false_values:
                value = False
            else:
                raise ValueError(text)
        else:
            value = option.kind(text)
    except ValueError:
        raise ConfigurationError("[{}] {} expects a {} value, got '{}'".format(
            section, key, option.kind.__name__, raw))
    if option.choices is not None and value not in option.choices:
        raise ConfigurationError("[{}] {} must be one of {}, got '{}'".format(
            section, key, ", ".join(option.choices), value))
    return value


def _render_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_root() -> str:
    return os.environ.get(RUN_DIR_VARIABLE, "runs")


class ConfigFile(dict):
    """ Config File class.

    Maps section names to dictionaries of resolved values.

    Example:
        config = ConfigFile.load("pointmass.ini", overrides=["train.seed=4"])
        config["train"]["seed"]   # 4
    """

    def __init__(self, values: dict = None):
        super(ConfigFile, self).__init__({section: {} for section in schema})
        for section, entries in (values or {}).items():
            for key, value in entries.items():
                self.set(section, key, value)

    @classmethod
    def parse(cls, text: str, source: str = "<string>", overrides: list = (), validate: bool = True):
        """ Parse configuration text.

        :param text: File contents.
        :param source: Name used in error messages.
        :param overrides: Iterable of 'section.key=value' strings.
        :param validate: Whether to fill defaults and check cross-key invariants.
        :return: The resolved configuration.
        """
        config = cls()
        section = None
        for number, line in enumerate(text.splitlines(), start=1):
            stripped = line.split("#", 1)[0].split(";", 1)[0].strip()
            if not stripped:
                continue
            if stripped.startswith("[") and stripped.endswith("]"):
                section = stripped[1:-1].strip()
                if section not in schema:
                    raise ConfigurationError("{}:{}: unknown section [{}]".format(source, number, section))
                continue
            if "=" not in stripped:
                raise ConfigurationError("{}:{}: expected 'key = value', got '{}'".format(source, number, stripped))
            if section is None:
                raise ConfigurationError("{}:{}: key outside of any section".format(source, number))
            key, raw = (part.strip() for part in stripped.split("=", 1))
            config.set(section, key, raw)
        config.apply_overrides(overrides)
        if validate:
            config.validate()
        return config

    @classmethod
    def load(cls, path: str, overrides: list = ()):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.parse(fh.read(), source=path, overrides=overrides)

    def set(self, section: str, key: str, value):
        if section not in schema:
            raise ConfigurationError("Unknown section [{}]".format(section))
        if key not in schema[section]:
            raise ConfigurationError("Unknown key [{}] {}".format(section, key))
        self[section][key] = _convert(section, key, value if isinstance(value, str) else _render_value(value))

    def apply_overrides(self, overrides: list):
        for override in overrides:
            if "=" not in override:
                raise ConfigurationError("Override '{}' must have the form section.key=value".format(override))
            route, raw = override.split("=", 1)
            try:
                section, key = split_route(route.strip().lstrip("-"))
            except ValueError as e:
                raise ConfigurationError(str(e))
            self.set(section, key, raw)
        return self

    def copy_with(self, *overrides: str):
        """ A resolved copy with extra 'section.key=value' overrides applied. """
        return ConfigFile.parse(self.render(), overrides=overrides)

    def validate(self):
        for section, options in schema.items():
            for key, option in options.items():
                if key in self[section]:
                    continue
                if option.default is _REQUIRED:
                    raise ConfigurationError("Missing required key [{}] {}".format(section, key))
                self[section][key] = option.default
        env, agent, train, stats = self["env"], self["agent"], self["train"], self["stats"]
        positive = (("env", "episode_length"), ("env", "grid_size"), ("agent", "hidden_dim"),
                    ("agent", "embed_dim"), ("agent", "skill_period"), ("agent", "knn_k"), ("agent", "nstep"),
                    ("agent", "batch_size"), ("agent", "update_every"), ("train", "sweep_period"),
                    ("train", "eval_episodes"), ("train", "replay_capacity"), ("train", "log_every"),
                    ("stats", "resamples"))
        for section, key in positive:
            if self[section][key] < 1:
                raise ConfigurationError("[{}] {} must be at least 1".format(section, key))
        if agent["skill_dim"] < 0:
            raise ConfigurationError("[agent] skill_dim must not be negative")
        if agent["temperature"] <= 0:
            raise ConfigurationError("[agent] temperature must be positive")
        if agent["variant"] == "uncertainty" and agent["ensemble_size"] < 2:
            raise ConfigurationError("[agent] ensemble_size must be at least 2 for the uncertainty variant")
        if agent["diayn_skills"] < 2:
            raise ConfigurationError("[agent] diayn_skills must be at least 2")
        if not 0.0 <= agent["critic_tau"] <= 1.0:
            raise ConfigurationError("[agent] critic_tau must lie in [0, 1]")
        for key in ("num_pretrain_steps", "num_finetune_steps", "seed_frames"):
            if train[key] < 0:
                raise ConfigurationError("[train] {} must not be negative".format(key))
        if train["seed_frames"] > train["num_finetune_steps"]:
            raise ConfigurationError("[train] seed_frames ({}) exceeds [train] num_finetune_steps ({})".format(
                train["seed_frames"], train["num_finetune_steps"]))
        sweep_candidates(train["sweep_step"])
        if not 0.0 < stats["level"] < 1.0:
            raise ConfigurationError("[stats] level must lie strictly between 0 and 1")
        if env["kind"] == "gridworld" and env["observation"] == "onehot" and agent["kind"] != "diayn":
            raise ConfigurationError("[env] observation = onehot is only supported for the diayn agent")
        return self

    def render(self) -> str:
        lines = []
        for section, options in schema.items():
            lines.append("[{}]".format(section))
            for key in options:
                if key in self[section]:
                    lines.append("{} = {}".format(key, _render_value(self[section][key])))
            lines.append("")
        return "\n".join(lines)


def sweep_candidates(sweep_step: float, name: str = "[train] sweep_step") -> list:
    """ Grid values v in {0, step, ..., 1} for the skill grid sweep. """
    if not 0.0 < sweep_step <= 1.0:
        raise ConfigurationError("{} must lie in (0, 1], got {}".format(name, sweep_step))
    count = int(round(1.0 / sweep_step))
    if abs(count * sweep_step - 1.0) > 1e-9:
        raise ConfigurationError("{} {} does not divide [0, 1] evenly".format(name, sweep_step))
    return [index / count for index in range(count + 1)]
