"""Reinforcement-learning environment around the harvest engine.

One environment step = one game tick = one agent decision.  Episodes run a
fixed number of ticks (no early termination on resource exhaustion).  In
local mode the focus worker rotates round-robin every tick, and the
observation returned by step() is already taken from the *next* focus unit
so it matches the next decision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Optional, Union

from . import maps
from .encoding import (GlobalAction, LocalAction, Mode, Observation,
                       decode_global, decode_local, encode_global,
                       encode_local, observation_to_json, rotation_next)
from .engine import Command, GameState, Owner, RewardEvent, apply

EPISODE_LENGTH = 2000
REWARD_PER_EVENT = 10.0


class EpisodeDone(RuntimeError):
    """Raised when step() is called on a finished episode."""


@dataclass(frozen=True)
class EnvConfig:
    map: Union[str, maps.MapSpec] = "4x4"
    mode: Mode = Mode.GLOBAL
    window: int = 1
    episode_length: int = EPISODE_LENGTH
    seed: int = 0

    def __post_init__(self):
        if self.episode_length <= 0:
            raise ValueError("episode_length must be positive")
        if self.mode == Mode.LOCAL and self.window < 1:
            raise ValueError("local mode needs window >= 1")

    def map_spec(self) -> maps.MapSpec:
        if isinstance(self.map, maps.MapSpec):
            return self.map
        return maps.builtin(self.map)


@dataclass
class StepResult:
    obs: Observation
    reward: float
    done: bool
    info: dict


@dataclass
class ReplayRecorder:
    """Buffers one JSON-serializable record per step; write_jsonl dumps them.

    With include_observations the post-step observation tensor rides along
    as a flat array plus its shape triple.
    """

    include_observations: bool = False
    records: list[dict] = field(default_factory=list)

    def record(self, entry: dict) -> None:
        self.records.append(entry)

    def write_jsonl(self, fp: IO[str]) -> None:
        for entry in self.records:
            fp.write(json.dumps(entry) + "\n")


def _event_dict(ev: RewardEvent) -> dict:
    return {"kind": ev.kind, "unit_id": ev.unit_id, "tick": ev.tick}


class HarvestEnv:
    """reset/step loop over the engine with representation dispatch."""

    def __init__(self, cfg: EnvConfig, recorder: Optional[ReplayRecorder] = None):
        self.cfg = cfg
        self.recorder = recorder
        self._spec = cfg.map_spec()
        self.state: GameState = self._spec.to_state()
        self._episode_reward = 0.0
        self._focus_index = -1
        self.focus_unit_id: Optional[int] = None
        self._done = False

    def reset(self) -> Observation:
        self.state = self._spec.to_state()
        self._episode_reward = 0.0
        self._done = False
        self._focus_index = -1
        if self.cfg.mode == Mode.LOCAL:
            self._focus_index = 0
            self.focus_unit_id = rotation_next(self.state, -1)
        else:
            self.focus_unit_id = None
        return self._observe()

    def _observe(self) -> Observation:
        if self.cfg.mode == Mode.GLOBAL:
            return encode_global(self.state)
        assert self.focus_unit_id is not None
        return encode_local(self.state, self.focus_unit_id, self.cfg.window)

    def _decode(self, action: Union[GlobalAction, LocalAction]) -> Optional[Command]:
        if self.cfg.mode == Mode.GLOBAL:
            if not isinstance(action, GlobalAction):
                raise TypeError("global-mode environment expects a GlobalAction")
            return decode_global(action, self.state)
        if not isinstance(action, LocalAction):
            raise TypeError("local-mode environment expects a LocalAction")
        assert self.focus_unit_id is not None
        return decode_local(action, self.focus_unit_id, self.state)

    def step(self, action: Union[GlobalAction, LocalAction]) -> StepResult:
        cmd = self._decode(action)
        return self._advance(cmd, action)

    def step_command(self, cmd: Optional[Command]) -> StepResult:
        """Step with a raw engine command (rule-based agents, replays).

        The command is not re-derived from any observation, but it still
        degrades to NOOP inside the engine if invalid.
        """
        return self._advance(cmd, None)

    def _advance(self, cmd: Optional[Command],
                 action: Union[GlobalAction, LocalAction, None]) -> StepResult:
        if self._done:
            raise EpisodeDone("episode finished; call reset()")
        self.state, events = apply(self.state, cmd)
        reward = REWARD_PER_EVENT * len(events)
        self._episode_reward += reward
        self._done = self.state.tick >= self.cfg.episode_length
        # Advance rotation before encoding so the observation matches the
        # unit the next action will command.
        if self.cfg.mode == Mode.LOCAL:
            self.focus_unit_id = rotation_next(self.state, self._focus_index)
            self._focus_index += 1
        obs = self._observe()
        info = {
            "tick": self.state.tick,
            "events": events,
            "focus_unit_id": self.focus_unit_id,
        }
        if self.recorder is not None:
            entry = {
                "tick": self.state.tick,
                "action": list(action.indices) if action is not None else None,
                "command": None if cmd is None else {
                    "unit_id": cmd.unit_id,
                    "action": cmd.action.name.lower(),
                    "direction": cmd.direction.name.lower(),
                },
                "reward": reward,
                "events": [_event_dict(ev) for ev in events],
            }
            if self.recorder.include_observations:
                entry["obs"] = observation_to_json(obs)
            self.recorder.record(entry)
        return StepResult(obs=obs, reward=reward, done=self._done, info=info)

    def episode_reward(self) -> float:
        return self._episode_reward

    @property
    def done(self) -> bool:
        return self._done

    @property
    def stockpile(self) -> int:
        return self.state.stockpile[Owner.PLAYER1]
