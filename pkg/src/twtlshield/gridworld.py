"""Grid environments with overestimated action uncertainty.

Cells are (x, y) with (0, 0) at the bottom-left.  Nine actions: the eight
compass directions plus Stay.  A directional action succeeds with probability
1 - eps_real and otherwise lands uniformly on one of the other feasible moves
(Stay included); Stay itself is deterministic.  The declared prior knowledge
is looser: intended moves carry [1 - eps, 1] and every unintended feasible
move [0, eps], with eps >= eps_real.

Moves off the grid or through a one-way door are removed from the cell's
action set entirely rather than remapped, and they are excluded from the
unintended alternatives as well.  Probabilities are assembled in exact
rational arithmetic before conversion to float.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .twtl import parse_formula
from .mdp import LabeledIntervalMdp

ACTIONS = ("N", "NE", "E", "SE", "S", "SW", "W", "NW", "Stay")
MOVES = {
    "N": (0, 1), "NE": (1, 1), "E": (1, 0), "SE": (1, -1),
    "S": (0, -1), "SW": (-1, -1), "W": (-1, 0), "NW": (-1, 1),
    "Stay": (0, 0),
}


class GridError(Exception):
    pass


@dataclass
class GridSpec:
    width: int
    height: int
    real_uncertainty: float
    assumed_uncertainty: float
    labels: dict = field(default_factory=dict)        # (x, y) -> iterable of propositions
    reward_cells: dict = field(default_factory=dict)  # (x, y) -> bonus per occupied step
    one_way_doors: dict = field(default_factory=dict) # (x, y) -> forbidden actions there
    start_cell: tuple = (0, 0)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise GridError("grid dimensions must be positive")
        if not (0.0 <= self.real_uncertainty < 1.0):
            raise GridError("real uncertainty must lie in [0, 1)")
        if self.assumed_uncertainty < self.real_uncertainty:
            raise GridError("assumed uncertainty must dominate the real uncertainty")
        for cell in list(self.labels) + list(self.reward_cells) + list(self.one_way_doors) + [self.start_cell]:
            if not self.in_bounds(cell):
                raise GridError(f"cell {cell} is outside the {self.width}x{self.height} grid")
        for cell, forbidden in self.one_way_doors.items():
            forbidden = frozenset(forbidden)
            if "Stay" in forbidden:
                raise GridError(f"Stay cannot be forbidden (cell {cell})")
            self.one_way_doors[cell] = forbidden

    def in_bounds(self, cell):
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def feasible_moves(self, cell):
        """Actions usable at the cell: on-grid targets not blocked by a door."""
        forbidden = self.one_way_doors.get(cell, frozenset())
        moves = []
        for a in ACTIONS:
            if a in forbidden:
                continue
            dx, dy = MOVES[a]
            if self.in_bounds((cell[0] + dx, cell[1] + dy)):
                moves.append(a)
        return tuple(moves)

    def target(self, cell, action):
        dx, dy = MOVES[action]
        return (cell[0] + dx, cell[1] + dy)

    def alphabet(self):
        props = set()
        for values in self.labels.values():
            props.update(values)
        return frozenset(props)

    def to_json(self) -> str:
        doc = {
            "width": self.width,
            "height": self.height,
            "real_uncertainty": self.real_uncertainty,
            "assumed_uncertainty": self.assumed_uncertainty,
            "labels": {f"{x},{y}": sorted(props) for (x, y), props in sorted(self.labels.items())},
            "reward_cells": {f"{x},{y}": value for (x, y), value in sorted(self.reward_cells.items())},
            "one_way_doors": {f"{x},{y}": sorted(acts) for (x, y), acts in sorted(self.one_way_doors.items())},
            "start_cell": list(self.start_cell),
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)

        def cell(key):
            x, y = key.split(",")
            return (int(x), int(y))

        return cls(
            width=int(doc["width"]),
            height=int(doc["height"]),
            real_uncertainty=float(doc["real_uncertainty"]),
            assumed_uncertainty=float(doc["assumed_uncertainty"]),
            labels={cell(k): frozenset(v) for k, v in doc.get("labels", {}).items()},
            reward_cells={cell(k): float(v) for k, v in doc.get("reward_cells", {}).items()},
            one_way_doors={cell(k): frozenset(v) for k, v in doc.get("one_way_doors", {}).items()},
            start_cell=tuple(doc.get("start_cell", [0, 0])),
        )


def build_grid_mdp(spec: GridSpec) -> LabeledIntervalMdp:
    """Interval MDP over grid cells with exact true dynamics inside the bounds."""
    eps_real = Fraction(spec.real_uncertainty).limit_denominator(10 ** 9)
    eps = spec.assumed_uncertainty
    states = [(x, y) for y in range(spec.height) for x in range(spec.width)]
    labels = {cell: frozenset(spec.labels.get(cell, ())) for cell in states}
    bounds = {}
    dynamics = {}
    enabled = {}
    for cell in states:
        moves = spec.feasible_moves(cell)
        enabled[cell] = moves
        for a in moves:
            if a == "Stay":
                bounds[(cell, a, cell)] = (1.0, 1.0)
                dynamics[(cell, a, cell)] = 1.0
                continue
            intended = spec.target(cell, a)
            alternatives = [spec.target(cell, other) for other in moves if other != a]
            share = eps_real / len(alternatives) if alternatives else Fraction(0)
            bounds[(cell, a, intended)] = (1.0 - eps, 1.0)
            dynamics[(cell, a, intended)] = float(1 - eps_real)
            for other in alternatives:
                bounds[(cell, a, other)] = (0.0, eps)
                dynamics[(cell, a, other)] = float(share)

    rewards = dict(spec.reward_cells)
    reward_fn = lambda s, a: rewards.get(s, 0.0)
    return LabeledIntervalMdp(states, ACTIONS, labels, bounds, dynamics, reward_fn, enabled)


# Canonical six-by-six pickup-and-delivery layout.  The coordinates, door
# placement, and reward band are fixed constants of this package, chosen so
# the worst-case bounds stay workable across the documented uncertainty
# sweep; they are configuration, not derived quantities.
CASE_STUDY_FORMULA = ("[H^1 P]^[0,8] . [H^1 D1]^[0,6] . "
                      "([H^1 D2]^[0,6] | [H^1 D3]^[0,6]) . [H^1 Base]^[0,12]")
CASE_STUDY_PROPS = ("Base", "D1", "D2", "D3", "P")

_CASE_LABELS = {
    (2, 2): ("P",),
    (3, 3): ("D1",),
    (4, 4): ("D2",),
    (4, 2): ("D3",),
    (1, 3): ("Base",),
}
_CASE_DOORS = {
    # one-way door on the edge below P: enter northward only, never back down
    (2, 1): ("NE", "NW"),
    (2, 2): ("S", "SE", "SW"),
}
_CASE_REWARDS = {
    (3, 1): 2.0,
    (4, 1): 4.0,
    (4, 2): 6.0,
    (4, 3): 10.0,
}


def canonical_case_study(real_uncertainty=0.03, assumed_uncertainty=0.08):
    """The packaged 6x6 pickup-and-delivery scenario and its constraint."""
    spec = GridSpec(
        width=6,
        height=6,
        real_uncertainty=real_uncertainty,
        assumed_uncertainty=assumed_uncertainty,
        labels={cell: frozenset(props) for cell, props in _CASE_LABELS.items()},
        reward_cells=dict(_CASE_REWARDS),
        one_way_doors={cell: frozenset(acts) for cell, acts in _CASE_DOORS.items()},
        start_cell=(0, 0),
    )
    formula = parse_formula(CASE_STUDY_FORMULA, CASE_STUDY_PROPS)
    return spec, formula


def render_ascii(spec: GridSpec) -> str:
    """Map with labels, reward shading (., :, *, #) and door markers."""
    rows = []
    shades = " .:*#"
    max_reward = max(spec.reward_cells.values(), default=0.0)
    for y in range(spec.height - 1, -1, -1):
        cells = []
        for x in range(spec.width):
            cell = (x, y)
            props = sorted(spec.labels.get(cell, ()))
            if props:
                text = props[0][:4]
            elif cell in spec.reward_cells and max_reward > 0:
                level = spec.reward_cells[cell] / max_reward
                text = shades[min(4, 1 + int(level * 3.999))] * 2
            else:
                text = ""
            if cell in spec.one_way_doors:
                text = "=" + text
            cells.append(text.center(4))
        rows.append("|" + "|".join(cells) + "|")
    sep = "+" + "+".join(["-" * 4] * spec.width) + "+"
    lines = [sep]
    for row in rows:
        lines.append(row)
        lines.append(sep)
    return "\n".join(lines)
