"""Text map format, loader, and the three built-in harvest maps.

Legend: '.' empty, 'R' resource node, 'B' player-1 base, 'W' player-1
worker, 'E' player-2 base.  An optional first line ``resources=<n>`` sets
the initial mineral count of every resource node (default 230).  Rows are
y = 0 at the top; columns are x = 0 at the left.
"""

from __future__ import annotations

from dataclasses import dataclass

from .engine import GameState, Owner, Unit, UnitKind

DEFAULT_NODE_RESOURCES = 230

# Static hit points: no combat in this task, the values only feed the
# observation encoder (base hp clamps into the >=6 bucket regardless).
UNIT_HP = {
    UnitKind.RESOURCE: 1,
    UnitKind.BASE: 10,
    UnitKind.WORKER: 1,
}

_LEGEND = {
    "R": (UnitKind.RESOURCE, Owner.NEUTRAL),
    "B": (UnitKind.BASE, Owner.PLAYER1),
    "W": (UnitKind.WORKER, Owner.PLAYER1),
    "E": (UnitKind.BASE, Owner.PLAYER2),
}


class MapError(ValueError):
    """Malformed map text; message carries row/column context."""


@dataclass(frozen=True)
class MapSpec:
    width: int
    height: int
    rows: tuple[str, ...]  # legend characters, one string per row
    node_resources: int = DEFAULT_NODE_RESOURCES

    def to_state(self) -> GameState:
        """Instantiate a fresh game state; unit ids follow row-major scan order."""
        units: dict[int, Unit] = {}
        next_id = 0
        for y, row in enumerate(self.rows):
            for x, ch in enumerate(row):
                if ch == ".":
                    continue
                kind, owner = _LEGEND[ch]
                resources = self.node_resources if kind == UnitKind.RESOURCE else 0
                units[next_id] = Unit(next_id, kind, owner, x, y,
                                      UNIT_HP[kind], resources)
                next_id += 1
        return GameState(width=self.width, height=self.height, units=units)


def parse_map(text: str) -> MapSpec:
    lines = [ln for ln in text.splitlines() if ln.strip() != ""]
    node_resources = DEFAULT_NODE_RESOURCES
    if lines and lines[0].startswith("resources="):
        value = lines[0].split("=", 1)[1]
        try:
            node_resources = int(value)
        except ValueError:
            raise MapError(f"bad resources header: {lines[0]!r}") from None
        if node_resources < 1:
            raise MapError(f"resources must be >= 1, got {node_resources}")
        lines = lines[1:]
    if not lines:
        raise MapError("map has no grid rows")

    width = len(lines[0])
    for y, row in enumerate(lines):
        if len(row) != width:
            raise MapError(f"row {y} has length {len(row)}, expected {width}")
        for x, ch in enumerate(row):
            if ch != "." and ch not in _LEGEND:
                raise MapError(f"unknown legend character {ch!r} at row {y} column {x}")
    # One character per cell makes overlap impossible by construction; the
    # check stays for maps assembled programmatically via MapSpec.
    return MapSpec(width=width, height=len(lines), rows=tuple(lines),
                   node_resources=node_resources)


def serialize_map(spec: MapSpec) -> str:
    lines = [f"resources={spec.node_resources}"]
    lines.extend(spec.rows)
    return "\n".join(lines) + "\n"


# Fixed layouts.  4x4 places each worker adjacent to both the base and the
# resource node; 6x6 and 8x8 grow the base-node distance, with the enemy
# base inert in the far corner.
BUILTIN_MAPS = {
    "4x4": "resources=230\nRW..\nWB..\n....\n...E\n",
    "6x6": "resources=230\nR.....\n.WW...\n..B...\n......\n......\n.....E\n",
    "8x8": ("resources=230\nR.......\n.W......\n..W.....\n........\n"
            "....B...\n........\n........\n.......E\n"),
}


def builtin(name: str) -> MapSpec:
    if name not in BUILTIN_MAPS:
        raise MapError(f"unknown built-in map {name!r}; "
                       f"choose from {sorted(BUILTIN_MAPS)}")
    return parse_map(BUILTIN_MAPS[name])
