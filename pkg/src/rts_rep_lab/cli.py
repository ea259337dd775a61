"""Operator entry point: train, eval, replay, and report commands.

Configuration comes from an optional JSON config file plus flags, with
flags winning.  Every run directory is self-describing (manifest with the
config and its hash), training logs are JSONL, plot-ready exports are CSV,
and the report path renders matplotlib figures next to them.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import a2c, maps, metrics, plots
from .agents import PolicyAgent, RandomAgent, ScriptedHarvester
from .encoding import Mode
from .engine import GameState, Owner, UnitKind
from .env import EnvConfig, HarvestEnv, ReplayRecorder

DEFAULT_OUT_ENV = "RTS_REP_LAB_OUT"

_CONFIG_KEYS = {
    "map", "mode", "w", "seeds", "total_steps", "episode_length",
    "lr", "gamma", "beta", "eta", "omega", "out", "agent", "episodes",
    "record", "every",
}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 for bad configuration
        raise ConfigError(message)


def _parse_seeds(value) -> tuple[int, ...]:
    try:
        if isinstance(value, str):
            seeds = tuple(int(s) for s in value.split(",") if s.strip() != "")
        else:
            seeds = tuple(int(s) for s in value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad seed list {value!r}") from None
    if not seeds:
        raise ConfigError("seed list is empty")
    return seeds


def build_parser(suppress_defaults: bool = False) -> _Parser:
    # With suppressed defaults the parsed namespace holds only flags the
    # user actually typed, which is how "flags beat the config file" works.
    def d(value):
        return argparse.SUPPRESS if suppress_defaults else value

    def add_common_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, default=d(None),
                       help="JSON config file; flags override its values")
        p.add_argument("--map", default=d("4x4"),
                       help="built-in map name or path to a map file")
        p.add_argument("--mode", choices=["global", "local"], default=d("global"))
        p.add_argument("--w", type=int, default=d(1), help="local window radius")
        p.add_argument("--seeds", default=d("1,2,3"),
                       help="comma-separated seed list")
        p.add_argument("--episode-length", type=int, default=d(2000))
        p.add_argument("--out", type=Path, default=d(None),
                       help=f"output directory (default ${DEFAULT_OUT_ENV} or ./runs)")

    parser = _Parser(prog="rts-rep-lab",
                     description="Harvest-task representation lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train A2C agents, one run per seed")
    add_common_flags(p_train)
    p_train.add_argument("--total-steps", type=int, default=d(2_000_000))
    p_train.add_argument("--lr", type=float, default=d(0.0007))
    p_train.add_argument("--gamma", type=float, default=d(0.99))
    p_train.add_argument("--beta", type=float, default=d(0.25))
    p_train.add_argument("--eta", type=float, default=d(0.01))
    p_train.add_argument("--omega", type=float, default=d(0.5))
    p_train.add_argument("--quiet", action="store_true", default=d(False))

    p_eval = sub.add_parser("eval", help="evaluate an agent, one row per seed sweep")
    add_common_flags(p_eval)
    p_eval.add_argument("--agent", default=d("random"),
                        help="random | scripted | checkpoint:<path>")
    p_eval.add_argument("--episodes", type=int, default=d(5))

    p_replay = sub.add_parser("replay", help="record one episode with board renders")
    add_common_flags(p_replay)
    p_replay.add_argument("--agent", default=d("random"),
                          help="random | scripted | checkpoint:<path>")
    p_replay.add_argument("--record", type=Path, default=d(None),
                          help="replay JSONL path (default <out>/replay.jsonl)")
    p_replay.add_argument("--every", type=int, default=d(1),
                          help="render the board every N ticks")

    p_report = sub.add_parser("report",
                              help="combine training curves into CSV and figures")
    p_report.add_argument("--runs", nargs="+", type=Path, required=True,
                          help="run directories (each containing seed*/curve.csv)")
    p_report.add_argument("--out", type=Path, default=d(None))
    return parser


def _load_config_file(args: argparse.Namespace,
                      argv: Optional[Sequence[str]]) -> None:
    """Overlay JSON config values onto flags the user did not type."""
    if getattr(args, "config", None) is None:
        return
    try:
        data = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    provided = vars(build_parser(suppress_defaults=True).parse_args(argv))
    for key, value in data.items():
        if key not in provided and hasattr(args, key):
            setattr(args, key, Path(value) if key in ("out", "record") else value)


def _default_out(args: argparse.Namespace, name: str) -> Path:
    if getattr(args, "out", None) is not None:
        return Path(args.out)
    root = os.environ.get(DEFAULT_OUT_ENV, "runs")
    return Path(root) / name


def _env_config(args: argparse.Namespace, seed: int = 0) -> EnvConfig:
    map_arg = args.map
    if map_arg not in maps.BUILTIN_MAPS:
        path = Path(map_arg)
        if not path.exists():
            raise ConfigError(f"--map {map_arg!r} is neither a built-in "
                              f"({sorted(maps.BUILTIN_MAPS)}) nor a file")
        try:
            map_arg = maps.parse_map(path.read_text())
        except maps.MapError as exc:
            raise ConfigError(f"bad map file {path}: {exc}") from None
    try:
        return EnvConfig(map=map_arg, mode=Mode(args.mode), window=args.w,
                         episode_length=args.episode_length, seed=seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _resolve_agent(spec: str, args: argparse.Namespace):
    """Agent plus the env config it should be evaluated under."""
    if spec == "random":
        return RandomAgent(), _env_config(args)
    if spec == "scripted":
        return ScriptedHarvester(), _env_config(args)
    if spec.startswith("checkpoint:"):
        path = Path(spec.split(":", 1)[1])
        if not path.exists():
            raise ConfigError(f"checkpoint not found: {path}")
        agent = PolicyAgent.from_checkpoint(path)
        cfg_echo = agent.config
        args.mode = cfg_echo.get("mode", args.mode)
        args.w = cfg_echo.get("window", args.w)
        if args.map == "4x4" and "map" in cfg_echo:
            args.map = cfg_echo["map"]
        return agent, _env_config(args)
    raise ConfigError(f"unknown agent {spec!r}; "
                      "use random | scripted | checkpoint:<path>")


def _map_label(map_arg) -> str:
    if isinstance(map_arg, str):
        if map_arg in maps.BUILTIN_MAPS:
            return map_arg
        return Path(map_arg).stem
    return "custom"


def _run_label(args: argparse.Namespace) -> str:
    label = f"{_map_label(args.map)}-{args.mode}"
    if args.mode == "local":
        label += f"-w{args.w}"
    return label


def cmd_train(args: argparse.Namespace) -> int:
    hp = a2c.Hyperparams(
        gamma=args.gamma, beta=args.beta, eta=args.eta, omega=args.omega,
        lr=args.lr, total_steps=args.total_steps,
        episode_length=args.episode_length, seeds=_parse_seeds(args.seeds),
    )
    cfg = _env_config(args)
    out_root = _default_out(args, f"train-{_run_label(args)}")

    def on_episode(seed: int, rec: a2c.EpisodeRecord) -> None:
        if not args.quiet and (rec.episode % 10 == 0 or rec.episode == 1):
            print(f"seed {seed} episode {rec.episode}/{hp.episodes} "
                  f"reward {rec.episode_reward:.0f} entropy {rec.entropy:.1f}",
                  flush=True)

    runs = a2c.train(cfg, hp, out_root=out_root, on_episode=on_episode)

    groups = {_run_label(args): [
        (np.array([r.total_steps for r in run.records], dtype=float),
         np.array([r.episode_reward for r in run.records]))
        for run in runs]}
    seeds = {_run_label(args): [run.seed for run in runs]}
    plots.write_combined_curves_csv(groups, seeds, out_root / "curves.csv")
    plots.plot_learning_curves(groups, out_root / "curves.png")
    print(f"wrote {len(runs)} run(s) under {out_root}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    agent, cfg = _resolve_agent(args.agent, args)
    seeds = _parse_seeds(args.seeds)
    records = [metrics.evaluate(agent, cfg, episodes=args.episodes, seed=s)
               for s in seeds]
    summary = metrics.aggregate(records)
    map_name = _map_label(args.map)
    rows = [metrics.MetricsRow(f"{args.agent} (seed {s})", map_name, rec)
            for s, rec in zip(seeds, records)]
    rows.append(metrics.MetricsRow(f"{args.agent} (mean)", map_name, summary))
    table = metrics.format_table(rows)
    print(table)
    out_dir = _default_out(args, f"eval-{_run_label(args)}")
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "metrics.csv", "w") as fp:
        metrics.write_csv(rows, fp)
    (out_dir / "metrics.txt").write_text(table + "\n")
    print(f"wrote {out_dir / 'metrics.csv'}")
    return 0


def render_board(state: GameState) -> str:
    """ASCII board: '.' empty, R node, B/E bases, w worker (W when loaded)."""
    grid = [["." for _ in range(state.width)] for _ in range(state.height)]
    for u in state.units_sorted():
        if u.kind == UnitKind.RESOURCE:
            ch = "R"
        elif u.kind == UnitKind.BASE:
            ch = "B" if u.owner == Owner.PLAYER1 else "E"
        elif u.kind == UnitKind.WORKER:
            ch = "W" if u.resources else "w"
        else:
            ch = "?"
        grid[u.y][u.x] = ch
    lines = [f"tick={state.tick} stockpile={state.stockpile[Owner.PLAYER1]}"]
    lines.extend("".join(row) for row in grid)
    return "\n".join(lines) + "\n"


def cmd_replay(args: argparse.Namespace) -> int:
    agent, cfg = _resolve_agent(args.agent, args)
    out_dir = _default_out(args, f"replay-{_run_label(args)}")
    out_dir.mkdir(parents=True, exist_ok=True)
    recorder = ReplayRecorder()
    env = HarvestEnv(cfg, recorder=recorder)
    rng = np.random.default_rng(_parse_seeds(args.seeds)[0])

    frames = []
    obs = env.reset()
    frames.append(render_board(env.state))
    done = False
    while not done:
        if agent.observes == "observation":
            result = env.step(agent.act(obs, rng))
        else:
            result = env.step_command(agent.act(env.state, rng))
        obs = result.obs
        done = result.done
        if env.state.tick % max(1, args.every) == 0:
            frames.append(render_board(env.state))

    replay_path = args.record or (out_dir / "replay.jsonl")
    with open(replay_path, "w") as fp:
        recorder.write_jsonl(fp)
    (out_dir / "render.txt").write_text("\n".join(frames))
    print(f"episode reward {env.episode_reward():.0f}, "
          f"stockpile {env.stockpile}")
    print(f"wrote {replay_path} and {out_dir / 'render.txt'}")
    return 0


def _collect_curves(run_dir: Path) -> list[tuple[Path, int]]:
    """(curve.csv, seed) pairs under a run directory."""
    found = []
    if (run_dir / "curve.csv").exists():
        seed = 0
        if run_dir.name.startswith("seed"):
            try:
                seed = int(run_dir.name[4:])
            except ValueError:
                pass
        found.append((run_dir / "curve.csv", seed))
        return found
    for child in sorted(run_dir.glob("seed*")):
        if (child / "curve.csv").exists():
            try:
                seed = int(child.name[4:])
            except ValueError:
                seed = 0
            found.append((child / "curve.csv", seed))
    return found


def cmd_report(args: argparse.Namespace) -> int:
    groups: dict[str, list[tuple[np.ndarray, np.ndarray]]] = {}
    seeds: dict[str, list[int]] = {}
    for run_dir in args.runs:
        run_dir = Path(run_dir)
        curves = _collect_curves(run_dir)
        if not curves:
            raise ConfigError(f"no curve.csv found under {run_dir}")
        label = run_dir.name
        groups[label] = []
        seeds[label] = []
        for path, seed in curves:
            steps, rewards = plots.read_curve_csv(path)
            groups[label].append((steps, rewards))
            seeds[label].append(seed)
    out_dir = args.out or _default_out(args, "report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = plots.write_combined_curves_csv(groups, seeds,
                                               out_dir / "curves.csv")
    png_path = plots.plot_learning_curves(groups, out_dir / "curves.png")
    print(f"wrote {csv_path} and {png_path}")
    return 0


_COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "replay": cmd_replay,
    "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = build_parser().parse_args(argv)
        _load_config_file(args, argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
