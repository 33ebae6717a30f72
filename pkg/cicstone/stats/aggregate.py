# -*- coding: utf-8 -*-
""" Aggregate Statistics.

Scores of many (task, seed) runs are normalized by a per-task expert reference and
summarized with the interquartile mean, median, mean and optimality gap. Intervals
come from a stratified percentile bootstrap: seeds are resampled with replacement
independently within every task, then the statistic is recomputed over the pooled
runs.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from cicstone.core.errors import ContractError

__all__ = ["normalize", "iqm", "optimality_gap", "median", "mean", "statistics", "ScoreTable",
           "stratified_bootstrap_ci", "SCORE_COLUMNS", "REPORT_COLUMNS", "read_score_rows", "read_expert_file",
           "append_score_row", "report_rows", "SCALE_LABEL"]

SCORE_COLUMNS = ("agent", "env", "task", "seed", "phase", "score")
REPORT_COLUMNS = ("agent", "statistic", "point", "lo", "hi", "scale")
SCALE_LABEL = "desk-scale"


def normalize(raw: float, expert: float, floor: float = 0.0) -> float:
    """ (raw - floor) / (expert - floor); raw / expert with the default floor. May exceed 1. """
    if expert - floor <= 0.0:
        raise ContractError("Expert score {} must exceed the floor {}".format(expert, floor))
    return (raw - floor) / (expert - floor)


def _scores(scores) -> np.ndarray:
    return np.asarray(scores, dtype=np.float64).reshape(-1)


def iqm(scores) -> float:
    """ Mean after dropping the floor(n/4) lowest and floor(n/4) highest scores. """
    scores = np.sort(_scores(scores))
    if scores.shape[0] < 4:
        raise ContractError("The interquartile mean needs at least 4 scores, got {}".format(scores.shape[0]))
    cut = scores.shape[0] // 4
    return float(np.mean(scores[cut:scores.shape[0] - cut]))


def optimality_gap(scores) -> float:
    return float(np.mean(np.maximum(0.0, 1.0 - _scores(scores))))


def median(scores) -> float:
    return float(np.median(_scores(scores)))


def mean(scores) -> float:
    return float(np.mean(_scores(scores)))


statistics = {
    "iqm": iqm,
    "median": median,
    "mean": mean,
    "optimality_gap": optimality_gap,
}
"""dict: Statistic name -> function of a flat score array."""


@dataclass
class ScoreTable:
    """ Normalized scores grouped by task.

    Example:
        table = ScoreTable()
        table.add("reach_ne", 1, 0.8)
        table.add("reach_ne", 2, 0.6)
    """

    entries: dict = field(default_factory=dict)

    def add(self, task: str, seed: int, score: float):
        runs = self.entries.setdefault(task, {})
        if seed in runs:
            raise ContractError("Duplicate score for task '{}' seed {}".format(task, seed))
        runs[seed] = float(score)

    @property
    def tasks(self) -> list:
        return sorted(self.entries)

    def task_scores(self, task: str) -> np.ndarray:
        runs = self.entries[task]
        return np.array([runs[seed] for seed in sorted(runs)])

    def pooled(self) -> np.ndarray:
        return np.concatenate([self.task_scores(task) for task in self.tasks]) if self.entries else np.zeros(0)

    def __len__(self) -> int:
        return sum(len(runs) for runs in self.entries.values())


def stratified_bootstrap_ci(table: ScoreTable, statistic, resamples: int = 2000, level: float = 0.95,
                            rng: np.random.Generator = None) -> tuple:
    """ Percentile interval of a statistic under within-task resampling of seeds.

    :param table: Scores by task.
    :param statistic: Function of the pooled score array, or a name from `statistics`.
    :param resamples: Number of bootstrap resamples.
    :param level: Coverage level of the interval.
    :param rng: Source of randomness.
    :return: Tuple of (lo, hi).
    """
    if isinstance(statistic, str):
        statistic = statistics[statistic]
    if not table.entries:
        raise ContractError("Cannot bootstrap an empty score table")
    for task in table.tasks:
        if len(table.entries[task]) < 2:
            raise ContractError("Task '{}' has a single seed; the bootstrap needs at least 2".format(task))
    if resamples < 1 or not 0.0 < level < 1.0:
        raise ContractError("Need resamples >= 1 and a level in (0, 1)")
    rng = rng if rng is not None else np.random.default_rng(0)
    per_task = [table.task_scores(task) for task in table.tasks]
    values = np.empty(resamples)
    for index in range(resamples):
        pooled = [scores[rng.integers(0, scores.shape[0], size=scores.shape[0])] for scores in per_task]
        values[index] = statistic(np.concatenate(pooled))
    tail = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(values, [tail, 100.0 - tail])
    return float(lo), float(hi)


def read_score_rows(path: str) -> list:
    """ Read a score CSV written by finetune; malformed rows raise ContractError with their line number. """
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != SCORE_COLUMNS:
            raise ContractError("{}:1: expected header {}".format(path, ",".join(SCORE_COLUMNS)))
        for number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(SCORE_COLUMNS):
                raise ContractError("{}:{}: expected {} fields, got {}".format(
                    path, number, len(SCORE_COLUMNS), len(row)))
            record = dict(zip(SCORE_COLUMNS, row))
            try:
                record["seed"] = int(record["seed"])
                record["score"] = float(record["score"])
            except ValueError:
                raise ContractError("{}:{}: malformed seed or score".format(path, number))
            if not np.isfinite(record["score"]):
                raise ContractError("{}:{}: score is not finite".format(path, number))
            rows.append(record)
    return rows


def read_expert_file(path: str) -> dict:
    """ (env, task) -> (expert, floor) from a CSV with columns env, task, expert, floor. """
    references = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != ("env", "task", "expert", "floor"):
            raise ContractError("{}:1: expected header env,task,expert,floor".format(path))
        for number, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                env, task, expert, floor = row
                references[(env, task)] = (float(expert), float(floor))
            except ValueError:
                raise ContractError("{}:{}: malformed expert row".format(path, number))
    return references


def append_score_row(path: str, row: dict):
    """ Append one score row, writing the header first when the file is new or empty. """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            fresh = not fh.read(1)
    except FileNotFoundError:
        fresh = True
    with open(path, "a", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if fresh:
            writer.writerow(SCORE_COLUMNS)
        writer.writerow([row[column] if column != "score" else repr(float(row[column])) for column in SCORE_COLUMNS])


def report_rows(rows: list, references: dict = None, resamples: int = 2000, level: float = 0.95,
                rng: np.random.Generator = None) -> list:
    """ Point estimates and bootstrap intervals of every statistic, per agent.

    :param rows: Score rows as returned by read_score_rows.
    :param references: Optional (env, task) -> (expert, floor); raw scores are used without it.
    :param resamples: Bootstrap resamples.
    :param level: Interval level.
    :param rng: Source of randomness shared by all intervals, consumed in row order.
    :return: Rows with the REPORT_COLUMNS keys.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    tables = {}
    for row in rows:
        score = row["score"]
        if references is not None:
            key = (row["env"], row["task"])
            if key not in references:
                raise ContractError("No expert reference for env '{}' task '{}'".format(*key))
            score = normalize(score, *references[key])
        tables.setdefault(row["agent"], ScoreTable()).add("{}/{}".format(row["env"], row["task"]), row["seed"], score)
    report = []
    for agent in sorted(tables):
        table = tables[agent]
        pooled = table.pooled()
        for name, function in statistics.items():
            if name == "iqm" and pooled.shape[0] < 4:
                continue
            lo, hi = stratified_bootstrap_ci(table, function, resamples, level, rng)
            report.append({"agent": agent, "statistic": name, "point": function(pooled), "lo": lo, "hi": hi,
                           "scale": SCALE_LABEL})
    return report
