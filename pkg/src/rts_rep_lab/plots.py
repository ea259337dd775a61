"""Learning-curve figures for training runs.

Renders per-seed episode-reward curves (faint) plus their running mean
(bold) against cumulative environment steps, one panel per labelled group,
saved to PNG next to the CSV exports.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _smooth(values: np.ndarray, window: int = 10) -> np.ndarray:
    """Trailing moving average; short prefixes average what exists."""
    out = np.empty_like(values, dtype=float)
    for i in range(len(values)):
        out[i] = values[max(0, i - window + 1):i + 1].mean()
    return out


def plot_learning_curves(groups: dict[str, list[tuple[np.ndarray, np.ndarray]]],
                         out_path: Union[str, Path],
                         title: str = "Episode reward over training") -> Path:
    """groups maps a label (e.g. "local w=1") to per-seed (steps, rewards)
    series.  Returns the written path."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i, (label, series) in enumerate(sorted(groups.items())):
        color = colors[i % len(colors)]
        for steps, rewards in series:
            ax.plot(steps, rewards, color=color, alpha=0.25, linewidth=0.8)
        # Mean over seeds on the common episode grid, then smoothed.
        min_len = min(len(r) for _, r in series)
        stacked = np.stack([np.asarray(r[:min_len], dtype=float)
                            for _, r in series])
        steps = np.asarray(series[0][0][:min_len], dtype=float)
        ax.plot(steps, _smooth(stacked.mean(axis=0)), color=color,
                linewidth=1.8, label=label)
    ax.set_xlabel("environment steps")
    ax.set_ylabel("episode reward")
    ax.set_title(title)
    ax.legend(loc="best")
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def read_curve_csv(path: Union[str, Path]) -> tuple[np.ndarray, np.ndarray]:
    """Load (total_steps, episode_reward) from a training curve.csv."""
    rows = np.genfromtxt(path, delimiter=",", names=True)
    rows = np.atleast_1d(rows)
    return rows["total_steps"], rows["episode_reward"]


def write_combined_curves_csv(groups: dict[str, list[tuple[np.ndarray, np.ndarray]]],
                              seeds_per_group: dict[str, Sequence[int]],
                              out_path: Union[str, Path]) -> Path:
    """Long-format CSV of every curve: label, seed, episode, steps, reward."""
    out_path = Path(out_path)
    with open(out_path, "w") as fp:
        fp.write("label,seed,episode,total_steps,episode_reward\n")
        for label in sorted(groups):
            for seed, (steps, rewards) in zip(seeds_per_group[label],
                                              groups[label]):
                for episode, (s, r) in enumerate(zip(steps, rewards), start=1):
                    fp.write(f"{label},{seed},{episode},{int(s)},{float(r)!r}\n")
    return out_path
