# -*- coding: utf-8 -*-
""" Command Line.

Subcommands:

    pretrain            reward-free pretraining; writes config.ini, log.jsonl, checkpoint.cick
    finetune            sweep + finetune + evaluate a checkpoint; appends a score row
    eval                evaluate a checkpoint with a given skill value
    plot-flow           behavioural flow field of a pointmass checkpoint as SVG
    report              IQM / median / mean / optimality gap with bootstrap intervals
    gridworld-study     coverage of CIC versus DIAYN with K skills on the gridworld
    ablate              zero-shot dispersion over the values of one config key
    termination-study   fixed-length versus early-termination pretraining on pointmass
    expert              from-scratch expert references for score normalization

Config overrides are passed as extra `--section.key=value` arguments. Exit codes:
0 success, 2 configuration or input errors, 3 numerical failures, 4 corrupted files.
"""

import argparse
import csv
import os
import sys

from cicstone import __version__
from cicstone.core.checkpoint import load_checkpoint, save_checkpoint
from cicstone.core.config import ConfigFile, run_root, schema, sweep_candidates
from cicstone.core.errors import ConfigurationError, exit_code_for
from cicstone.core.svg import flow_field_svg, interval_svg
from cicstone.core.utils import TerminalColors, display, set_verbosity
from cicstone.core.rng import RandomStreams
from cicstone.envs import make_environment
from cicstone.stats.aggregate import (REPORT_COLUMNS, append_score_row, read_expert_file, read_score_rows,
                                      report_rows)
from cicstone.control import studies
from cicstone.control.trainer import evaluate, finetune, pretrain, restore_agent, run_directory

__all__ = ["main", "build_parser", "split_overrides", "write_rows"]

CHECKPOINT_NAME = "checkpoint.cick"
FINETUNED_NAME = "finetune.cick"
CONFIG_NAME = "config.ini"
LOG_NAME = "log.jsonl"
SCORES_NAME = "scores.csv"


def split_overrides(extra: list) -> list:
    """ Keep the `--section.key=value` arguments argparse did not recognize. """
    overrides = []
    for argument in extra:
        route = argument.lstrip("-").split("=", 1)[0]
        if not argument.startswith("--") or "=" not in argument or "." not in route:
            raise ConfigurationError("Unrecognized argument '{}'".format(argument))
        overrides.append(argument[2:])
    return overrides


def write_rows(path: str, columns: tuple, rows: list):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in columns])
    display(TerminalColors.OKGREEN + "wrote {} rows to {}".format(len(rows), path) + TerminalColors.ENDC)


def _load_config(path: str, overrides: list) -> ConfigFile:
    return ConfigFile.load(path, overrides)


def cmd_pretrain(args, overrides: list) -> str:
    config = _load_config(args.config, overrides)
    directory = run_directory(config, run_root())
    with open(os.path.join(directory, CONFIG_NAME), "w", encoding="utf-8") as fh:
        fh.write(config.render())
    pretrain(config, log_path=os.path.join(directory, LOG_NAME),
             checkpoint_path=os.path.join(directory, CHECKPOINT_NAME))
    print(directory)
    return directory


def cmd_finetune(args, overrides: list) -> float:
    checkpoint = load_checkpoint(args.checkpoint)
    directory = os.path.dirname(os.path.abspath(args.checkpoint))
    result = finetune(checkpoint, args.task, overrides, log_path=os.path.join(directory, "finetune.jsonl"))
    save_checkpoint(os.path.join(directory, FINETUNED_NAME), result.checkpoint)
    config = ConfigFile.parse(result.checkpoint.config_text)
    metadata = result.checkpoint.metadata
    append_score_row(args.scores or os.path.join(run_root(), SCORES_NAME), {
        "agent": metadata["agent"], "env": metadata["env"], "task": metadata["task"],
        "seed": config["train"]["seed"], "phase": "finetune", "score": result.score})
    print(repr(result.score))
    return result.score


def _skill_for(agent, value: str, seed: int):
    if value == "random":
        return agent.sample_skill(RandomStreams(seed).stream("eval.skill"))
    candidates = agent.sweep_candidates([float(value)])
    if agent.kind == "diayn":
        index = int(float(value))
        if not 0 <= index < len(candidates):
            raise ConfigurationError("DIAYN skill index must lie in [0, {})".format(len(candidates)))
        return candidates[index][1]
    return candidates[0][1]


def cmd_eval(args, overrides: list) -> float:
    checkpoint = load_checkpoint(args.checkpoint)
    config, agent = restore_agent(checkpoint, overrides)
    env = make_environment(config["env"], args.task)
    skill = _skill_for(agent, args.skill, config["train"]["seed"])
    score, returns = evaluate(agent, env, skill, args.episodes or config["train"]["eval_episodes"],
                              config["train"]["seed"], dump_path=args.dump)
    display("returns: {}".format(", ".join("{:.4f}".format(value) for value in returns)))
    print(repr(score))
    return score


def cmd_plot_flow(args, overrides: list) -> str:
    checkpoint = load_checkpoint(args.checkpoint)
    config, agent = restore_agent(checkpoint, overrides)
    if config["env"]["kind"] != "pointmass":
        raise ConfigurationError("plot-flow needs a pointmass checkpoint, got '{}'".format(config["env"]["kind"]))
    env = make_environment(config["env"])
    values = sweep_candidates(args.sweep_step, "--sweep-step")
    panels = studies.flow_field(agent, env, values, args.grid, args.horizon, dump_path=args.dump)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(flow_field_svg(panels, deterministic=args.deterministic))
    return args.out


def cmd_report(args, overrides: list) -> list:
    rows = [row for path in args.scores for row in read_score_rows(path)]
    expert_file = args.expert
    references = read_expert_file(expert_file) if expert_file else None
    if references is None:
        display(TerminalColors.WARNING + "No expert file given; reporting raw scores" + TerminalColors.ENDC)
    rng = RandomStreams(args.seed).stream("report.bootstrap")
    report = report_rows(rows, references, args.resamples, args.level, rng)
    write_rows(args.out, REPORT_COLUMNS, report)
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(interval_svg(report, deterministic=args.deterministic))
    return report


def cmd_gridworld_study(args, overrides: list) -> list:
    config = _load_config(args.config, overrides)
    seeds = args.seeds or list(range(1, config["stats"]["seeds"] + 1))
    rows = studies.gridworld_study(config, args.ks, seeds, args.steps, args.jobs)
    write_rows(args.out, studies.GRIDWORLD_COLUMNS, rows)
    return rows


def cmd_ablate(args, overrides: list) -> list:
    config = _load_config(args.config, overrides)
    seeds = args.seeds or list(range(1, config["stats"]["seeds"] + 1))
    rows = studies.ablation_study(config, args.key, args.values, seeds, args.jobs)
    write_rows(args.out, studies.ABLATION_COLUMNS, rows)
    return rows


def cmd_termination_study(args, overrides: list) -> list:
    config = _load_config(args.config, overrides)
    seeds = args.seeds or list(range(1, config["stats"]["seeds"] + 1))
    rows = studies.termination_study(config, args.modes, args.agents, seeds, args.jobs)
    write_rows(args.out, studies.TERMINATION_COLUMNS, rows)
    return rows


def cmd_expert(args, overrides: list) -> list:
    config = _load_config(args.config, overrides)
    tasks = args.tasks or [config["env"]["task"] or None]
    rows = studies.run_parallel(studies.expert_reference, [(config, task) for task in tasks], args.jobs)
    write_rows(args.out, studies.EXPERT_COLUMNS, rows)
    return rows


commands = {
    "pretrain": cmd_pretrain,
    "finetune": cmd_finetune,
    "eval": cmd_eval,
    "plot-flow": cmd_plot_flow,
    "report": cmd_report,
    "gridworld-study": cmd_gridworld_study,
    "ablate": cmd_ablate,
    "termination-study": cmd_termination_study,
    "expert": cmd_expert,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cicstone",
        description="Contrastive intrinsic control experiments at desk scale."
    )
    parser.version = __version__
    parser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="Sets the verbosity of the operation."
    )
    parser.add_argument(
        "-V",
        "--version",
        action="version",
        help="Gets the current running version of cicstone."
    )
    parser.add_argument(
        "--deterministic",
        action="store_true",
        help="Leaves generation timestamps out of emitted files."
    )
    parser.add_argument(
        "--jobs",
        action="store",
        type=int,
        default=1,
        help="Number of independent runs executed concurrently."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    sub = subparsers.add_parser("pretrain", help="Reward-free pretraining.")
    sub.add_argument("config", type=str, help="Path of the run configuration.")

    sub = subparsers.add_parser("finetune", help="Adapt and finetune a pretrained checkpoint.")
    sub.add_argument("checkpoint", type=str, help="Path of the pretrained checkpoint.")
    sub.add_argument("--task", type=str, default=None, help="Extrinsic task id.")
    sub.add_argument("--scores", type=str, default=None, help="Score CSV the result row is appended to.")

    sub = subparsers.add_parser("eval", help="Evaluate a checkpoint with a fixed skill.")
    sub.add_argument("checkpoint", type=str, help="Path of the checkpoint.")
    sub.add_argument("--task", type=str, default=None, help="Extrinsic task id.")
    sub.add_argument("--skill", type=str, default="random",
                     help="Sweep value v for z = v * 1, a DIAYN skill index, or 'random'.")
    sub.add_argument("--episodes", type=int, default=None, help="Number of evaluation episodes.")
    sub.add_argument("--dump", type=str, default=None, help="JSON-lines trajectory dump.")

    sub = subparsers.add_parser("plot-flow", help="Flow field of a pointmass checkpoint.")
    sub.add_argument("checkpoint", type=str, help="Path of the checkpoint.")
    sub.add_argument("--out", type=str, required=True, help="Output SVG path.")
    sub.add_argument("--sweep-step", type=float, default=0.25, help="Grid step of the skill values.")
    sub.add_argument("--grid", type=int, default=9, help="Start points per axis.")
    sub.add_argument("--horizon", type=int, default=10, help="Steps rolled from every start point.")
    sub.add_argument("--dump", type=str, default=None, help="JSON-lines dump of the rolled positions.")

    sub = subparsers.add_parser("report", help="Aggregate score CSVs.")
    sub.add_argument("scores", type=str, nargs="+", help="Score CSV files.")
    sub.add_argument("--expert", type=str, default=None, help="Expert reference CSV.")
    sub.add_argument("--out", type=str, required=True, help="Report CSV path.")
    sub.add_argument("--svg", type=str, default=None, help="Interval plot SVG path.")
    sub.add_argument("--resamples", type=int, default=schema["stats"]["resamples"].default,
                     help="Bootstrap resamples.")
    sub.add_argument("--level", type=float, default=schema["stats"]["level"].default, help="Interval level.")
    sub.add_argument("--seed", type=int, default=schema["train"]["seed"].default, help="Bootstrap seed.")

    sub = subparsers.add_parser("gridworld-study", help="Gridworld coverage of CIC and DIAYN.")
    sub.add_argument("config", type=str, help="Path of the base configuration.")
    sub.add_argument("--ks", type=int, nargs="+", default=[4], help="DIAYN skill counts.")
    sub.add_argument("--seeds", type=int, nargs="+", default=None, help="Seeds.")
    sub.add_argument("--steps", type=int, default=None, help="Pretraining steps per run.")
    sub.add_argument("--out", type=str, required=True, help="Output CSV path.")

    sub = subparsers.add_parser("ablate", help="Zero-shot dispersion over the values of one key.")
    sub.add_argument("config", type=str, help="Path of the base configuration.")
    sub.add_argument("--key", type=str, required=True, help="Dotted config key, e.g. agent.skill_dim.")
    sub.add_argument("--values", type=str, nargs="+", required=True, help="Values of the key.")
    sub.add_argument("--seeds", type=int, nargs="+", default=None, help="Seeds.")
    sub.add_argument("--out", type=str, required=True, help="Output CSV path.")

    sub = subparsers.add_parser("termination-study", help="Fixed-length versus early termination.")
    sub.add_argument("config", type=str, help="Path of the base configuration.")
    sub.add_argument("--modes", type=str, nargs="+", default=["fixed", "early"], help="Termination modes.")
    sub.add_argument("--agents", type=str, nargs="+", default=["cic", "diayn", "fixed"], help="Agent kinds.")
    sub.add_argument("--seeds", type=int, nargs="+", default=None, help="Seeds.")
    sub.add_argument("--out", type=str, required=True, help="Output CSV path.")

    sub = subparsers.add_parser("expert", help="From-scratch expert references.")
    sub.add_argument("config", type=str, help="Path of the configuration.")
    sub.add_argument("--tasks", type=str, nargs="+", default=None, help="Task ids.")
    sub.add_argument("--out", type=str, required=True, help="Output CSV path.")
    return parser


def main(argv: list = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    set_verbosity(args.verbose)
    try:
        commands[args.command](args, split_overrides(extra))
    except (ValueError, RuntimeError, OSError) as e:
        code = 2 if isinstance(e, OSError) else exit_code_for(e)
        print(TerminalColors.FAIL + "error: {}".format(e) + TerminalColors.ENDC, file=sys.stderr)
        return code
    return 0

