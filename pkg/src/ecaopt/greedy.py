"""Greedy heuristics: incremental (IG), decremental (DG) and their static variants.

All four score an option ``e`` by ``delta_e / c_e`` where ``delta_e`` is the
change in ECA (not ECA squared) caused by toggling ``e`` relative to the
current selection.  Equal ratios go to the lexicographically smallest option
id, so traces are reproducible.

Purchases only shorten arcs, so IG keeps one all-pairs distance matrix and
patches it with :func:`apsp_decrease_update`.  Removals lengthen arcs and
force a full recompute.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .connectivity import all_pairs_distances, apsp_decrease_update, eca_squared_from_distances, parallel_map
from .instance import Instance, apply_scenario
from .solution import Solution, evaluate, fits_budget

RATIO_TOL = 1e-12


@dataclass(frozen=True)
class TraceStep:
    step: int
    action: str  # "add" or "remove"
    option: str
    ratio: float
    eca: float


@dataclass
class GreedyTrace:
    algorithm: str
    steps: list[TraceStep] = field(default_factory=list)
    solution: Solution | None = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "action", "option", "ratio", "eca"])
        for s in self.steps:
            w.writerow([s.step, s.action, s.option, repr(s.ratio), repr(s.eca)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "steps": [s.__dict__ for s in self.steps],
            "solution": self.solution.to_dict() if self.solution else None,
        }


class ScenarioState:
    """Distance matrix, weights and selection of one scenario."""

    def __init__(self, instance: Instance, selected: np.ndarray, dist=None):
        self.instance = instance
        self.selected = selected.copy()
        g = apply_scenario(instance, selected)
        self.weight = g.weight
        self.length = g.length
        self.dist = all_pairs_distances(g) if dist is None else dist
        self.eca = math.sqrt(eca_squared_from_distances(self.dist, self.weight))

    @classmethod
    def _raw(cls, instance, selected, weight, length, dist):
        s = cls.__new__(cls)
        s.instance, s.selected, s.weight, s.length, s.dist = instance, selected, weight, length, dist
        s.eca = math.sqrt(eca_squared_from_distances(dist, weight))
        return s

    def cost(self) -> float:
        return math.fsum(self.instance.option_cost[self.selected].tolist())

    def add(self, k: int) -> "ScenarioState":
        inst = self.instance
        opt = inst.options[k]
        sel = self.selected.copy()
        sel[k] = True
        weight, length, dist = self.weight, self.length, self.dist
        if opt.kind == "vertex":
            weight = weight.copy()
            weight[opt.vertex] = inst.improved_weight[opt.vertex]
        else:
            length = length.copy()
            for a in opt.arcs:
                new = inst.arc_improved_length[a]
                dist = apsp_decrease_update(dist, int(inst.arc_source[a]), int(inst.arc_target[a]),
                                            new, length[a])
                length[a] = new
        return ScenarioState._raw(inst, sel, weight, length, dist)

    def remove(self, k: int) -> "ScenarioState":
        sel = self.selected.copy()
        sel[k] = False
        if self.instance.options[k].kind == "vertex":
            return ScenarioState(self.instance, sel, self.dist)
        return ScenarioState(self.instance, sel)


def _pick(cands: list[tuple[str, int, float]], largest: bool, scale: float):
    """Best (id, index, ratio) with ties resolved toward the smallest id."""
    tol = RATIO_TOL * max(1.0, scale)
    best = None
    for c in sorted(cands):
        if best is None or (c[2] > best[2] + tol if largest else c[2] < best[2] - tol):
            best = c
    return best


def _add_gains(state: ScenarioState, ks: list[int], threads: int) -> list[tuple[str, int, float]]:
    opts = state.instance.options

    def gain(k):
        return (opts[k].id, k, (state.add(k).eca - state.eca) / opts[k].cost)

    return parallel_map(gain, ks, threads)


def _remove_losses(state: ScenarioState, ks: list[int], threads: int) -> list[tuple[str, int, float]]:
    opts = state.instance.options

    def loss(k):
        return (opts[k].id, k, (state.eca - state.remove(k).eca) / opts[k].cost)

    return parallel_map(loss, ks, threads)


def _incremental(state: ScenarioState, budget: float, trace: GreedyTrace, threads: int) -> ScenarioState:
    opts = state.instance.options
    spent = state.cost()
    while True:
        ks = [k for k in range(len(opts))
              if not state.selected[k] and fits_budget(spent + opts[k].cost, budget)]
        if not ks:
            return state
        oid, k, ratio = _pick(_add_gains(state, ks, threads), True, state.eca)
        state = state.add(k)
        spent = state.cost()
        trace.steps.append(TraceStep(len(trace.steps) + 1, "add", oid, ratio, state.eca))


def _finish(instance: Instance, state: ScenarioState, trace: GreedyTrace, threads: int):
    sol = evaluate(instance, instance.selected_ids(state.selected), threads=threads)
    trace.solution = sol
    return sol, trace


def _start(instance: Instance, budget: float | None) -> float:
    budget = instance.budget if budget is None else budget
    if not budget >= 0:
        raise ValueError(f"budget must be >= 0, got {budget!r}")
    return budget


def incremental_greedy(instance: Instance, budget: float | None = None, threads: int = 1):
    """IG: from nothing, repeatedly buy the affordable option of largest ratio."""
    budget = _start(instance, budget)
    trace = GreedyTrace("ig")
    state = ScenarioState(instance, np.zeros(len(instance.options), dtype=bool))
    state = _incremental(state, budget, trace, threads)
    return _finish(instance, state, trace, threads)


def decremental_greedy(instance: Instance, budget: float | None = None, threads: int = 1):
    """DG: from everything, drop the option of smallest ratio until affordable,
    then spend what is left with incremental steps (ratios recomputed)."""
    budget = _start(instance, budget)
    trace = GreedyTrace("dg")
    state = ScenarioState(instance, np.ones(len(instance.options), dtype=bool))
    while not fits_budget(state.cost(), budget):
        ks = [k for k in range(len(instance.options)) if state.selected[k]]
        oid, k, ratio = _pick(_remove_losses(state, ks, threads), False, state.eca)
        state = state.remove(k)
        trace.steps.append(TraceStep(len(trace.steps) + 1, "remove", oid, ratio, state.eca))
    state = _incremental(state, budget, trace, threads)
    return _finish(instance, state, trace, threads)


def _ranked(cands, largest: bool, scale: float) -> list[tuple[str, int, float]]:
    out, rest = [], list(cands)
    while rest:
        best = _pick(rest, largest, scale)
        out.append(best)
        rest.remove(best)
    return out


def static_increasing(instance: Instance, budget: float | None = None, threads: int = 1):
    """SI: rank once against the empty selection, buy in rank order while it fits."""
    budget = _start(instance, budget)
    trace = GreedyTrace("si")
    state = ScenarioState(instance, np.zeros(len(instance.options), dtype=bool))
    ranked = _ranked(_add_gains(state, list(range(len(instance.options))), threads), True, state.eca)
    spent = 0.0
    for oid, k, ratio in ranked:
        c = instance.options[k].cost
        if fits_budget(spent + c, budget):
            state = state.add(k)
            spent += c
            trace.steps.append(TraceStep(len(trace.steps) + 1, "add", oid, ratio, state.eca))
    return _finish(instance, state, trace, threads)


def static_decreasing(instance: Instance, budget: float | None = None, threads: int = 1):
    """SD: rank once against the full selection, drop lowest first until it fits,
    then refill the dropped options in reverse rank order where they still fit."""
    budget = _start(instance, budget)
    trace = GreedyTrace("sd")
    opts = instance.options
    state = ScenarioState(instance, np.ones(len(opts), dtype=bool))
    ranked = _ranked(_remove_losses(state, list(range(len(opts))), threads), False, state.eca)
    removed = []
    for oid, k, ratio in ranked:
        if fits_budget(state.cost(), budget):
            break
        state = state.remove(k)
        removed.append((oid, k, ratio))
        trace.steps.append(TraceStep(len(trace.steps) + 1, "remove", oid, ratio, state.eca))
    spent = state.cost()
    for oid, k, ratio in reversed(removed):
        if fits_budget(spent + opts[k].cost, budget):
            state = state.add(k)
            spent = state.cost()
            trace.steps.append(TraceStep(len(trace.steps) + 1, "add", oid, ratio, state.eca))
    return _finish(instance, state, trace, threads)


ALGORITHMS = {
    "ig": incremental_greedy,
    "dg": decremental_greedy,
    "si": static_increasing,
    "sd": static_decreasing,
}


def run(name: str, instance: Instance, budget: float | None = None, threads: int = 1):
    try:
        fn = ALGORITHMS[name]
    except KeyError:
        raise ValueError(f"unknown greedy algorithm {name!r}") from None
    return fn(instance, budget, threads=threads)


__all__ = [
    "GreedyTrace",
    "TraceStep",
    "incremental_greedy",
    "decremental_greedy",
    "static_increasing",
    "static_decreasing",
    "run",
    "ALGORITHMS",
]
