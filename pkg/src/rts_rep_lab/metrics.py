"""Evaluation metrics: first-harvest tick, first-return tick, and total
minerals returned, measured over five consecutive episodes (10,000 ticks)
and averaged across seeds.

First-event ticks count from the start of the evaluation and span episode
boundaries; a dash in formatted output marks an agent that never returned
anything in any run.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Optional, Sequence, Union

import numpy as np

from .agents import OBSERVATION_AGENT
from .engine import HARVEST_COMPLETE, RETURN_COMPLETE
from .env import EnvConfig, HarvestEnv

EVAL_EPISODES = 5


@dataclass(frozen=True)
class MetricsRecord:
    t_first_harvest: Optional[float]
    t_first_return: Optional[float]
    resources_returned: float  # the "r" column


@dataclass(frozen=True)
class AggregateRecord:
    t_first_harvest: Optional[float]
    t_first_return: Optional[float]
    resources_returned: float
    runs: int
    never_harvested: int  # runs excluded from the t_first_harvest mean
    never_returned: int   # runs excluded from the t_first_return mean


def evaluate(agent, cfg: EnvConfig, episodes: int = EVAL_EPISODES,
             seed: int = 0) -> MetricsRecord:
    """Run `episodes` consecutive fixed-length episodes and collect metrics.

    The agent's sampler is seeded once for the whole evaluation run.
    """
    rng = np.random.default_rng(seed)
    env = HarvestEnv(cfg)
    t_first_harvest: Optional[int] = None
    t_first_return: Optional[int] = None
    returned = 0
    step = 0
    for _ in range(episodes):
        obs = env.reset()
        done = False
        while not done:
            step += 1
            if agent.observes == OBSERVATION_AGENT:
                result = env.step(agent.act(obs, rng))
            else:
                result = env.step_command(agent.act(env.state, rng))
            obs = result.obs
            done = result.done
            for ev in result.info["events"]:
                if ev.kind == HARVEST_COMPLETE and t_first_harvest is None:
                    t_first_harvest = step
                if ev.kind == RETURN_COMPLETE:
                    returned += 1
                    if t_first_return is None:
                        t_first_return = step
    return MetricsRecord(
        t_first_harvest=None if t_first_harvest is None else float(t_first_harvest),
        t_first_return=None if t_first_return is None else float(t_first_return),
        resources_returned=float(returned),
    )


def aggregate(records: Sequence[MetricsRecord]) -> AggregateRecord:
    """Arithmetic means across seeds; absent first-event times are excluded
    from their mean and counted instead."""
    if not records:
        raise ValueError("aggregate needs at least one record")

    def mean_present(values: list[Optional[float]]) -> Optional[float]:
        present = [v for v in values if v is not None]
        if not present:
            return None
        return float(np.mean(present))

    harvests = [r.t_first_harvest for r in records]
    returns = [r.t_first_return for r in records]
    return AggregateRecord(
        t_first_harvest=mean_present(harvests),
        t_first_return=mean_present(returns),
        resources_returned=float(np.mean([r.resources_returned for r in records])),
        runs=len(records),
        never_harvested=sum(1 for v in harvests if v is None),
        never_returned=sum(1 for v in returns if v is None),
    )


@dataclass(frozen=True)
class MetricsRow:
    """One formatted table row: an agent on a map."""

    agent: str
    map: str
    record: Union[MetricsRecord, AggregateRecord]


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.2f}"


def format_table(rows: Sequence[MetricsRow]) -> str:
    header = f"{'agent':<24} {'map':<6} {'t_first_harvest':>16} {'t_first_return':>15} {'r':>8}"
    lines = [header, "-" * len(header)]
    for row in rows:
        rec = row.record
        lines.append(f"{row.agent:<24} {row.map:<6} "
                     f"{_fmt(rec.t_first_harvest):>16} "
                     f"{_fmt(rec.t_first_return):>15} "
                     f"{rec.resources_returned:>8.2f}")
    return "\n".join(lines)


def write_csv(rows: Sequence[MetricsRow], fp: IO[str]) -> None:
    writer = csv.writer(fp)
    writer.writerow(["agent", "map", "t_first_harvest", "t_first_return", "r"])
    for row in rows:
        rec = row.record
        writer.writerow([
            row.agent, row.map,
            "-" if rec.t_first_harvest is None else repr(rec.t_first_harvest),
            "-" if rec.t_first_return is None else repr(rec.t_first_return),
            repr(rec.resources_returned),
        ])
