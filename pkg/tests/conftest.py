"""Shared fixtures and state builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from rts_rep_lab import maps
from rts_rep_lab.agents import RandomAgent
from rts_rep_lab.engine import GameState, Owner, Unit, UnitKind, apply


def make_state(width: int, height: int, units: list[Unit],
               stockpile_p1: int = 0) -> GameState:
    state = GameState(width=width, height=height,
                      units={u.id: u for u in units})
    state.stockpile[Owner.PLAYER1] = stockpile_p1
    return state


def worker(uid: int, x: int, y: int, carrying: int = 0,
           owner: Owner = Owner.PLAYER1) -> Unit:
    return Unit(uid, UnitKind.WORKER, owner, x, y, hp=1, resources=carrying)


def resource(uid: int, x: int, y: int, amount: int = 10) -> Unit:
    return Unit(uid, UnitKind.RESOURCE, Owner.NEUTRAL, x, y, hp=1,
                resources=amount)


def base(uid: int, x: int, y: int, owner: Owner = Owner.PLAYER1) -> Unit:
    return Unit(uid, UnitKind.BASE, owner, x, y, hp=10)


def random_playout(map_name: str, steps: int, seed: int,
                   collect_every: int = 1) -> list[GameState]:
    """States visited by the uniform-valid random agent, starting state
    included.  A cheap generator of reachable states."""
    rng = np.random.default_rng(seed)
    agent = RandomAgent()
    state = maps.builtin(map_name).to_state()
    states = [state]
    for i in range(steps):
        state, _ = apply(state, agent.act(state, rng))
        if (i + 1) % collect_every == 0:
            states.append(state)
    return states


@pytest.fixture
def map_4x4() -> maps.MapSpec:
    return maps.builtin("4x4")


@pytest.fixture
def state_4x4(map_4x4) -> GameState:
    return map_4x4.to_state()
