"""Reference policies: the uniform-over-valid random baseline, a scripted
optimal harvester used as a performance oracle, and the wrapper that plays
back trained checkpoints.

The random and scripted agents read the raw game state (they embody the
game rules, like the engine-side baseline they reproduce); learned agents
see only observation tensors.  That asymmetry is intentional.
"""

from __future__ import annotations

from collections import deque
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .encoding import GlobalAction, LocalAction, Mode, Observation
from .engine import (ActionType, Command, DIRECTION_DELTAS, Direction,
                     GameState, Owner, Unit, UnitKind, legal_commands,
                     validate)
from .neural import (HeadLayout, Mlp, head_distributions, load_checkpoint,
                     sample_heads)

STATE_AGENT = "state"
OBSERVATION_AGENT = "observation"


class RandomAgent:
    """Uniform choice among engine-validated legal commands.

    Every sampled command is valid by construction, so unlike the learned
    agents it is never degraded to NOOP.
    """

    observes = STATE_AGENT

    def act(self, state: GameState, rng: np.random.Generator) -> Optional[Command]:
        commands = legal_commands(state, Owner.PLAYER1)
        if not commands:
            return None
        return commands[int(rng.integers(len(commands)))]


class ScriptedHarvester:
    """Shortest-path harvest/return cycling for all workers, one command per
    tick.  Sets the reward ceiling on the built-in maps."""

    observes = STATE_AGENT

    def act(self, state: GameState,
            rng: Optional[np.random.Generator] = None) -> Optional[Command]:
        reserved = self._move_destinations(state)
        for worker in state.workers(Owner.PLAYER1):
            if worker.activity is not None:
                continue
            cmd = self._command_for(state, worker, reserved)
            if cmd is not None:
                return cmd
        return None

    def _command_for(self, state: GameState, worker: Unit,
                     reserved: set[tuple[int, int]]) -> Optional[Command]:
        if worker.resources == 0:
            targets = [u for u in state.units_sorted()
                       if u.kind == UnitKind.RESOURCE and u.resources >= 1]
            finish = ActionType.HARVEST
        else:
            targets = [u for u in state.units_sorted()
                       if u.kind == UnitKind.BASE and u.owner == Owner.PLAYER1]
            finish = ActionType.RETURN
        if not targets:
            return None
        # Finish the cycle if already adjacent to a target.
        for direction in Direction:
            cmd = Command(worker.id, finish, direction)
            if validate(state, cmd):
                return cmd
        step = self._step_toward(state, worker, {t.pos for t in targets}, reserved)
        if step is not None:
            cmd = Command(worker.id, ActionType.MOVE, step)
            if validate(state, cmd):
                return cmd
        return None

    @staticmethod
    def _move_destinations(state: GameState) -> set[tuple[int, int]]:
        """Cells that in-flight moves will occupy; treated as blocked so two
        workers do not pathfind into the same square."""
        out = set()
        for u in state.units.values():
            if u.activity is not None and u.activity.action == ActionType.MOVE:
                dx, dy = DIRECTION_DELTAS[u.activity.direction]
                out.add((u.x + dx, u.y + dy))
        return out

    @staticmethod
    def _step_toward(state: GameState, worker: Unit,
                     goals: set[tuple[int, int]],
                     reserved: set[tuple[int, int]]) -> Optional[Direction]:
        """First move of a BFS shortest path to any cell adjacent to a goal,
        avoiding occupied and reserved cells."""
        blocked = {u.pos for u in state.units.values()} | reserved
        adjacent_to_goal = set()
        for gx, gy in goals:
            for dx, dy in DIRECTION_DELTAS.values():
                cell = (gx + dx, gy + dy)
                if state.in_bounds(*cell) and cell not in blocked:
                    adjacent_to_goal.add(cell)
        if not adjacent_to_goal:
            return None
        start = worker.pos
        frontier = deque([start])
        parent_dir: dict[tuple[int, int], Direction] = {}
        seen = {start}
        while frontier:
            cell = frontier.popleft()
            if cell in adjacent_to_goal:
                # Walk back to the first step out of the start cell.
                first = cell
                while parent_dir and first != start:
                    d = parent_dir[first]
                    dx, dy = DIRECTION_DELTAS[d]
                    prev = (first[0] - dx, first[1] - dy)
                    if prev == start:
                        return d
                    first = prev
                return None
            for direction in Direction:
                dx, dy = DIRECTION_DELTAS[direction]
                nxt = (cell[0] + dx, cell[1] + dy)
                if (not state.in_bounds(*nxt) or nxt in seen or nxt in blocked):
                    continue
                seen.add(nxt)
                parent_dir[nxt] = direction
                frontier.append(nxt)
        return None


class PolicyAgent:
    """Plays a trained checkpoint by sampling its categorical heads."""

    observes = OBSERVATION_AGENT

    def __init__(self, policy: Mlp, mode: Mode, layout: HeadLayout,
                 config: Optional[dict] = None):
        self.policy = policy
        self.mode = mode
        self.layout = layout
        self.config = config or {}

    @classmethod
    def from_checkpoint(cls, path: Union[str, Path]) -> "PolicyAgent":
        with open(path) as fp:
            policy, _value, _opt, config = load_checkpoint(fp)
        mode = Mode(config["mode"])
        if mode == Mode.LOCAL:
            layout = HeadLayout((4, 4))
        else:
            # Head widths [w, h, 4, 4]; recover w and h from the config echo.
            from . import maps
            spec = maps.builtin(config["map"])
            layout = HeadLayout((spec.width, spec.height, 4, 4))
        return cls(policy, mode, layout, config)

    def act(self, obs: Observation,
            rng: np.random.Generator) -> Union[GlobalAction, LocalAction]:
        if obs.mode != self.mode:
            raise ValueError(f"checkpoint is {self.mode.value}-mode but the "
                             f"observation is {obs.mode.value}-mode")
        logits, _ = self.policy.forward(obs.flat)
        picks = sample_heads(head_distributions(logits, self.layout), rng)
        if self.mode == Mode.GLOBAL:
            return GlobalAction(*picks)
        return LocalAction(*picks)
