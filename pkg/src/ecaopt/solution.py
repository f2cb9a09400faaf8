"""Result type shared by the heuristics, the exhaustive oracle and MIP decoding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import connectivity
from .instance import Instance, scenario_cost


@dataclass(frozen=True)
class Solution:
    selected: tuple[str, ...]
    eca_squared: float
    cost: float
    f_t: dict[str, float] = field(default_factory=dict, compare=False)

    @property
    def eca(self) -> float:
        return math.sqrt(self.eca_squared)

    def to_dict(self) -> dict:
        return {
            "selected": list(self.selected),
            "cost": self.cost,
            "eca": self.eca,
            "eca_squared": self.eca_squared,
        }


def evaluate(instance: Instance, selected, with_f_t: bool = False, threads: int = 1) -> Solution:
    """Score a selection from scratch with the reverse-Dijkstra ECA."""
    x = instance.scenario(selected)
    g = connectivity.as_graph(instance, x)
    ft = connectivity.f_all(g, threads=threads)
    sq = math.fsum((g.weight * ft).tolist())
    per = {v.id: float(f) for v, f in zip(instance.vertices, ft)} if with_f_t else {}
    return Solution(tuple(instance.selected_ids(x)), sq, scenario_cost(instance, x), per)


def fits_budget(cost: float, budget: float) -> bool:
    """Budget test shared by every solver (absorbs summation round-off)."""
    return cost <= budget + 1e-9 * max(1.0, abs(budget))
