"""Observation encoders and action codecs for the two representations.

Both representations describe each map cell through the same five feature
planes, in this order:

    0 hit points      0, 1, 2, 3, 4, 5, >=6
    1 resources       0, 1, 2, 3, 4, 5, >=6
    2 owner           player1, none, player2
    3 unit type       none, resource, base, barrack, worker, light, heavy
    4 current action  none, move, harvest, return, produce, attack

Global observations one-hot each plane over n_c = 7 columns (the largest
plane cardinality; shorter planes zero-pad) for every cell of the map,
flattened row-major.  Local observations view a (2w+1)^2 window centered
on a focus unit, prepend a "wall" value to every plane (n_c = 8), and
encode out-of-bounds window cells as wall on every plane.

A global action picks a cell plus an action: [x, y, type, param].  A local
action picks only [type, param] for the externally chosen focus unit.
Either decodes to an engine command when valid, else to nothing (the
environment then steps with NOOP).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .engine import (ActionType, Command, Direction, GameState, Owner,
                     UnitKind, validate)

N_FEATURES = 5
GLOBAL_CHANNELS = 7
LOCAL_CHANNELS = 8

N_ACTION_TYPES = 4  # noop, move, harvest, return
N_ACTION_PARAMS = 4  # up, right, down, left

# Value index of "empty cell" per plane (hp 0, resources 0, owner none,
# type none, action none), in global numbering.
_EMPTY_CELL_INDICES = (0, 0, 1, 0, 0)

# Plane cardinalities in global numbering; columns beyond these never light.
PLANE_CARDINALITIES = (7, 7, 3, 7, 6)

_OWNER_INDEX = {Owner.PLAYER1: 0, Owner.NEUTRAL: 1, Owner.PLAYER2: 2}


class Mode(str, Enum):
    GLOBAL = "global"
    LOCAL = "local"


@dataclass(frozen=True)
class Observation:
    mode: Mode
    tensor: np.ndarray  # (N_FEATURES, n_cells, n_channels) one-hot

    @property
    def flat(self) -> np.ndarray:
        return self.tensor.ravel()


@dataclass(frozen=True)
class GlobalAction:
    x: int
    y: int
    atype: int
    aparam: int

    @property
    def indices(self) -> tuple[int, int, int, int]:
        return (self.x, self.y, self.atype, self.aparam)


@dataclass(frozen=True)
class LocalAction:
    atype: int
    aparam: int

    @property
    def indices(self) -> tuple[int, int]:
        return (self.atype, self.aparam)


def _bucket(value: int) -> int:
    """Counts 0..5 index themselves; anything larger lands in the >=6 bucket."""
    return min(value, 6)


def _cell_value_indices(state: GameState, x: int, y: int) -> tuple[int, ...]:
    """Global value index per plane for one in-bounds cell."""
    unit = state.unit_at(x, y)
    if unit is None:
        return _EMPTY_CELL_INDICES
    if unit.kind == UnitKind.BASE:
        # Bases display their owner's stockpile.
        res = _bucket(state.stockpile[unit.owner])
    else:
        res = _bucket(unit.resources)
    action = 0 if unit.activity is None else int(unit.activity.action)
    return (
        _bucket(unit.hp),
        res,
        _OWNER_INDEX[unit.owner],
        1 + int(unit.kind),
        action,
    )


def encode_global(state: GameState) -> Observation:
    n_cells = state.width * state.height
    tensor = np.zeros((N_FEATURES, n_cells, GLOBAL_CHANNELS))
    # Empty-cell baseline everywhere, then overwrite occupied cells.
    for plane, idx in enumerate(_EMPTY_CELL_INDICES):
        tensor[plane, :, idx] = 1.0
    for unit in state.units.values():
        cell = unit.y * state.width + unit.x
        tensor[:, cell, :] = 0.0
        for plane, idx in enumerate(_cell_value_indices(state, unit.x, unit.y)):
            tensor[plane, cell, idx] = 1.0
    return Observation(Mode.GLOBAL, tensor)


def encode_local(state: GameState, unit_id: int, window: int) -> Observation:
    """Window of radius `window` centered on the unit; cells beyond the map
    boundary encode as wall (index 0) on every plane."""
    unit = state.units.get(unit_id)
    if unit is None:
        raise KeyError(f"no unit with id {unit_id}")
    side = 2 * window + 1
    tensor = np.zeros((N_FEATURES, side * side, LOCAL_CHANNELS))
    cell = 0
    for wy in range(unit.y - window, unit.y + window + 1):
        for wx in range(unit.x - window, unit.x + window + 1):
            if not state.in_bounds(wx, wy):
                tensor[:, cell, 0] = 1.0
            else:
                for plane, idx in enumerate(_cell_value_indices(state, wx, wy)):
                    tensor[plane, cell, idx + 1] = 1.0
            cell += 1
    return Observation(Mode.LOCAL, tensor)


def decode_global(action: GlobalAction, state: GameState,
                  player: Owner = Owner.PLAYER1) -> Command | None:
    """Command for the friendly idle worker at (x, y), when the full command
    validates; anything else decodes to nothing."""
    unit = state.unit_at(action.x, action.y)
    if unit is None or unit.kind != UnitKind.WORKER or unit.owner != player:
        return None
    if unit.activity is not None:
        return None
    cmd = Command(unit.id, ActionType(action.atype), Direction(action.aparam))
    if not validate(state, cmd, player):
        return None
    return cmd


def decode_local(action: LocalAction, focus_unit_id: int, state: GameState,
                 player: Owner = Owner.PLAYER1) -> Command | None:
    if focus_unit_id not in state.units:
        raise KeyError(f"no unit with id {focus_unit_id}")
    cmd = Command(focus_unit_id, ActionType(action.atype), Direction(action.aparam))
    if not validate(state, cmd, player):
        return None
    return cmd


def rotation_next(state: GameState, last_index: int,
                  player: Owner = Owner.PLAYER1) -> int:
    """Round-robin focus over the player's workers in ascending id order.

    `last_index` is the rotation position of the previous focus (-1 before
    the first decision).  Busy workers stay in the rotation; their commands
    simply degrade to NOOP.
    """
    workers = state.workers(player)
    if not workers:
        raise ValueError("rotation requires at least one worker")
    return workers[(last_index + 1) % len(workers)].id


def global_head_sizes(width: int, height: int) -> tuple[int, int, int, int]:
    """Categorical head widths for [x, y, type, param]."""
    return (width, height, N_ACTION_TYPES, N_ACTION_PARAMS)


def local_head_sizes() -> tuple[int, int]:
    """Categorical head widths for [type, param]."""
    return (N_ACTION_TYPES, N_ACTION_PARAMS)


def observation_size(mode: Mode, width: int, height: int, window: int) -> int:
    """Flattened observation length fed to the networks."""
    if mode == Mode.GLOBAL:
        return N_FEATURES * width * height * GLOBAL_CHANNELS
    side = 2 * window + 1
    return N_FEATURES * side * side * LOCAL_CHANNELS


def observation_to_json(obs: Observation) -> dict:
    """Log/replay form: flat array plus the declared shape triple."""
    return {
        "mode": obs.mode.value,
        "shape": list(obs.tensor.shape),
        "data": obs.tensor.ravel().astype(int).tolist(),
    }


def observation_from_json(d: dict) -> Observation:
    tensor = np.asarray(d["data"], dtype=float).reshape(d["shape"])
    return Observation(Mode(d["mode"]), tensor)
