"""Deterministic tick-based game core for the resource-harvest task.

The world is a rectangular grid of cells, each holding at most one unit.
Workers execute durative actions (move / harvest / return, each lasting a
fixed number of ticks); a command issued on tick t starts counting down on
that same tick and its effect lands atomically on the tick the countdown
reaches zero.  Everything is a pure function of (state, command): no RNG,
no global state, no hidden clocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional


class UnitKind(IntEnum):
    RESOURCE = 0
    BASE = 1
    BARRACKS = 2
    WORKER = 3
    LIGHT = 4
    HEAVY = 5


class Owner(IntEnum):
    PLAYER1 = 0
    PLAYER2 = 1
    NEUTRAL = 2


class ActionType(IntEnum):
    """Executable action types.

    Produce/attack appear only as observation feature values, never here:
    they cannot be issued in this task.
    """

    NOOP = 0
    MOVE = 1
    HARVEST = 2
    RETURN = 3


class Direction(IntEnum):
    UP = 0
    RIGHT = 1
    DOWN = 2
    LEFT = 3


# (dx, dy) per direction; y grows downward (row index), x rightward (column).
DIRECTION_DELTAS = {
    Direction.UP: (0, -1),
    Direction.RIGHT: (1, 0),
    Direction.DOWN: (0, 1),
    Direction.LEFT: (-1, 0),
}

# Ticks each durative action occupies a worker.  Harvest and return last 10
# ticks; move uses the standard worker move duration, which is also 10.
ACTION_DURATIONS = {
    ActionType.MOVE: 10,
    ActionType.HARVEST: 10,
    ActionType.RETURN: 10,
}


@dataclass
class Activity:
    """In-progress durative action of a unit."""

    action: ActionType
    direction: Direction
    ticks_remaining: int


@dataclass
class Unit:
    id: int
    kind: UnitKind
    owner: Owner
    x: int
    y: int
    hp: int
    resources: int = 0  # node: remaining minerals; worker: carried (0 or 1)
    activity: Optional[Activity] = None

    @property
    def pos(self) -> tuple[int, int]:
        return (self.x, self.y)

    def clone(self) -> "Unit":
        act = None
        if self.activity is not None:
            act = Activity(self.activity.action, self.activity.direction,
                           self.activity.ticks_remaining)
        return Unit(self.id, self.kind, self.owner, self.x, self.y,
                    self.hp, self.resources, act)


@dataclass(frozen=True)
class Command:
    unit_id: int
    action: ActionType
    direction: Direction = Direction.UP


@dataclass(frozen=True)
class RewardEvent:
    """Emitted on the tick a harvest or return completes; worth +10 each."""

    kind: str  # "harvest" or "return"
    unit_id: int
    tick: int  # state tick after the completing step

    @property
    def value(self) -> float:
        return 10.0


HARVEST_COMPLETE = "harvest"
RETURN_COMPLETE = "return"


@dataclass
class GameState:
    width: int
    height: int
    units: dict[int, Unit] = field(default_factory=dict)
    stockpile: dict[Owner, int] = field(
        default_factory=lambda: {Owner.PLAYER1: 0, Owner.PLAYER2: 0})
    tick: int = 0

    def clone(self) -> "GameState":
        return GameState(
            width=self.width,
            height=self.height,
            units={uid: u.clone() for uid, u in self.units.items()},
            stockpile=dict(self.stockpile),
            tick=self.tick,
        )

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def unit_at(self, x: int, y: int) -> Optional[Unit]:
        for u in self.units.values():
            if u.x == x and u.y == y:
                return u
        return None

    def units_sorted(self) -> list[Unit]:
        return [self.units[uid] for uid in sorted(self.units)]

    def workers(self, player: Owner) -> list[Unit]:
        """Player's workers in ascending id order."""
        return [u for u in self.units_sorted()
                if u.kind == UnitKind.WORKER and u.owner == player]


def validate(state: GameState, cmd: Command, player: Owner = Owner.PLAYER1) -> bool:
    """Validity oracle for a single command.

    The unit must exist; beyond that NOOP is always valid, and every other
    action requires an idle worker owned by the acting player plus the
    action-specific target condition.
    """
    unit = state.units.get(cmd.unit_id)
    if unit is None:
        return False
    if cmd.action == ActionType.NOOP:
        return True
    if unit.kind != UnitKind.WORKER or unit.owner != player:
        return False
    if unit.activity is not None:
        return False
    dx, dy = DIRECTION_DELTAS[cmd.direction]
    tx, ty = unit.x + dx, unit.y + dy
    if not state.in_bounds(tx, ty):
        return False
    target = state.unit_at(tx, ty)
    if cmd.action == ActionType.MOVE:
        return target is None
    if cmd.action == ActionType.HARVEST:
        return (unit.resources == 0 and target is not None
                and target.kind == UnitKind.RESOURCE and target.resources >= 1)
    if cmd.action == ActionType.RETURN:
        return (unit.resources == 1 and target is not None
                and target.kind == UnitKind.BASE and target.owner == player)
    return False


def _complete_activity(state: GameState, unit: Unit,
                       events: list[RewardEvent]) -> None:
    """Land the effect of a finished activity.  tick has not advanced yet;
    emitted events carry the post-step tick."""
    act = unit.activity
    assert act is not None
    unit.activity = None
    dx, dy = DIRECTION_DELTAS[act.direction]
    tx, ty = unit.x + dx, unit.y + dy
    done_tick = state.tick + 1

    if act.action == ActionType.MOVE:
        # Cancel silently if the target cell was taken mid-move.
        if state.unit_at(tx, ty) is None:
            unit.x, unit.y = tx, ty
    elif act.action == ActionType.HARVEST:
        node = state.unit_at(tx, ty)
        # Node may have been drained by the other worker mid-harvest; then
        # the harvest lands with no effect (keeps mineral conservation).
        if node is not None and node.kind == UnitKind.RESOURCE and node.resources >= 1:
            node.resources -= 1
            unit.resources = 1
            events.append(RewardEvent(HARVEST_COMPLETE, unit.id, done_tick))
    elif act.action == ActionType.RETURN:
        base = state.unit_at(tx, ty)
        if base is not None and base.kind == UnitKind.BASE and base.owner == unit.owner:
            unit.resources = 0
            state.stockpile[unit.owner] += 1
            events.append(RewardEvent(RETURN_COMPLETE, unit.id, done_tick))


def apply(state: GameState, cmd: Optional[Command] = None,
          player: Owner = Owner.PLAYER1) -> tuple[GameState, list[RewardEvent]]:
    """Advance the game by exactly one tick.

    An invalid command degrades to NOOP.  A valid non-NOOP command starts a
    durative activity on its unit; all in-progress activities (including one
    started this tick) then count down by one, and any that reach zero
    complete atomically.  Exhausted resource nodes are removed.
    """
    s = state.clone()
    events: list[RewardEvent] = []

    if cmd is not None and cmd.action != ActionType.NOOP and validate(s, cmd, player):
        unit = s.units[cmd.unit_id]
        unit.activity = Activity(cmd.action, cmd.direction,
                                 ACTION_DURATIONS[cmd.action])

    for unit in s.units_sorted():
        if unit.activity is None:
            continue
        unit.activity.ticks_remaining -= 1
        if unit.activity.ticks_remaining == 0:
            _complete_activity(s, unit, events)

    exhausted = [uid for uid, u in s.units.items()
                 if u.kind == UnitKind.RESOURCE and u.resources == 0]
    for uid in exhausted:
        del s.units[uid]

    s.tick += 1
    return s, events


def legal_commands(state: GameState, player: Owner = Owner.PLAYER1) -> list[Command]:
    """All valid commands for the player, one NOOP per idle friendly worker.

    Deterministic ordering: unit id, then action index, then direction index.
    """
    cmds: list[Command] = []
    for unit in state.workers(player):
        if unit.activity is not None:
            continue
        cmds.append(Command(unit.id, ActionType.NOOP, Direction.UP))
        for action in (ActionType.MOVE, ActionType.HARVEST, ActionType.RETURN):
            for direction in Direction:
                c = Command(unit.id, action, direction)
                if validate(state, c, player):
                    cmds.append(c)
    return cmds


_OWNER_TAGS = {Owner.PLAYER1: "p1", Owner.PLAYER2: "p2", Owner.NEUTRAL: "n"}


def canonical_text(state: GameState) -> str:
    """Canonical serialization: one line of globals, one line per unit in
    ascending id order.  Byte-identical iff the states are identical."""
    lines = [
        f"tick={state.tick} w={state.width} h={state.height} "
        f"p1={state.stockpile[Owner.PLAYER1]} p2={state.stockpile[Owner.PLAYER2]}"
    ]
    for u in state.units_sorted():
        if u.activity is None:
            act = "-"
        else:
            act = (f"{u.activity.action.name.lower()}:"
                   f"{u.activity.direction.name.lower()}:"
                   f"{u.activity.ticks_remaining}")
        lines.append(
            f"unit id={u.id} kind={u.kind.name.lower()} owner={_OWNER_TAGS[u.owner]} "
            f"x={u.x} y={u.y} hp={u.hp} res={u.resources} act={act}"
        )
    return "\n".join(lines) + "\n"


def total_minerals(state: GameState) -> int:
    """Node minerals + worker carries + both stockpiles (conserved by apply)."""
    carried = sum(u.resources for u in state.units.values()
                  if u.kind in (UnitKind.RESOURCE, UnitKind.WORKER))
    return carried + state.stockpile[Owner.PLAYER1] + state.stockpile[Owner.PLAYER2]
