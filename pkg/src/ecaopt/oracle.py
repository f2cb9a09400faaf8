"""Exhaustive optimum over budget-feasible option subsets, and budget sweeps
that score the greedy heuristics against it.

Subsets are enumerated depth first in increasing option order, pruning any
branch whose cost already exceeds the budget.  Every include step is one or
two decrease-only distance updates, so each subset costs O(n^2).
"""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass, field

import numpy as np

from . import greedy
from .connectivity import parallel_map
from .greedy import ScenarioState
from .instance import Instance
from .solution import Solution, evaluate, fits_budget

DEFAULT_CAP = 22
_PREFIX = 4  # enumeration chunks are fixed prefixes, independent of thread count
HEURISTICS = ("ig", "dg", "si", "sd")


class OracleCapError(ValueError):
    """Too many options for exhaustive enumeration."""


def _check_cap(instance: Instance, cap: int):
    k = len(instance.options)
    if k > cap:
        raise OracleCapError(f"{k} options exceed the exhaustive oracle cap of {cap}")


def _better(sq, cost, ids, best) -> bool:
    bsq, bcost, bids = best
    tol = 1e-12 * max(1.0, abs(bsq))
    if sq > bsq + tol:
        return True
    if sq < bsq - tol:
        return False
    if cost != bcost:
        return cost < bcost
    return ids < bids


class _Chunk:
    """Enumerates the subsets sharing one fixed decision prefix."""

    def __init__(self, instance: Instance, budgets: list[float], prefix: tuple[int, ...], root: ScenarioState):
        self.instance = instance
        self.budgets = budgets
        self.limit = max(budgets)
        self.prefix = prefix
        self.root = root
        self.best: list[tuple | None] = [None] * len(budgets)
        self.count = 0

    def _record(self, state: ScenarioState, cost: float):
        self.count += 1
        sq = state.eca * state.eca
        ids = tuple(sorted(self.instance.selected_ids(state.selected)))
        for i, b in enumerate(self.budgets):
            if fits_budget(cost, b) and (self.best[i] is None or _better(sq, cost, ids, self.best[i])):
                self.best[i] = (sq, cost, ids)

    def run(self):
        opts = self.instance.options
        state, cost = self.root, 0.0
        for k, bit in enumerate(self.prefix):
            if bit:
                cost += opts[k].cost
                if not fits_budget(cost, self.limit):
                    return self
                state = state.add(k)
        self._record(state, cost)
        self._descend(len(self.prefix), state, cost)
        return self

    def _descend(self, k: int, state: ScenarioState, cost: float):
        # subsets extending the prefix, each recorded once when its last option is added
        opts = self.instance.options
        for j in range(k, len(opts)):
            c = cost + opts[j].cost
            if fits_budget(c, self.limit):
                child = state.add(j)
                self._record(child, c)
                self._descend(j + 1, child, c)


def _enumerate(instance: Instance, budgets: list[float], threads: int = 1):
    opts = instance.options
    p = min(_PREFIX, len(opts))
    root = ScenarioState(instance, np.zeros(len(opts), dtype=bool))
    prefixes = [tuple((i >> (p - 1 - j)) & 1 for j in range(p)) for i in range(2 ** p)]
    chunks = [_Chunk(instance, budgets, pre, root) for pre in prefixes]
    done = parallel_map(lambda c: c.run(), chunks, threads)
    best: list[tuple | None] = [None] * len(budgets)
    for c in done:  # fixed prefix order: the reduction does not depend on threads
        for i, cand in enumerate(c.best):
            if cand is not None and (best[i] is None or _better(*cand, best[i])):
                best[i] = cand
    return best, sum(c.count for c in done)


@dataclass
class SweepRow:
    budget: float
    opt_eca: float
    eca: dict[str, float]
    ratio: dict[str, float]

    def as_csv_row(self) -> list:
        return ([self.budget, self.opt_eca] + [self.eca[h] for h in HEURISTICS]
                + [self.ratio[h] for h in HEURISTICS])


@dataclass
class OracleReport:
    best: Solution
    evaluated: int
    baseline_eca: float
    rows: list[SweepRow] = field(default_factory=list)

    COLUMNS = ["budget", "opt_eca"] + [f"{h}_eca" for h in HEURISTICS] + [f"{h}_ratio" for h in HEURISTICS]

    def summary(self) -> list[tuple[str, float, float]]:
        out = []
        for h in HEURISTICS:
            r = [row.ratio[h] for row in self.rows]
            out.append((h, min(r), statistics.fmean(r)) if r else (h, math.nan, math.nan))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row.as_csv_row()])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["algorithm", "min_ratio", "avg_ratio"])
        for h, lo, avg in self.summary():
            w.writerow([h, _fmt(lo), _fmt(avg)])
        return buf.getvalue()


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def gain_ratio(alg_eca: float, opt_eca: float, baseline_eca: float) -> float:
    """(ALG - base) / (OPT - base); 1 when the optimum gains nothing."""
    gain = opt_eca - baseline_eca
    if gain <= 1e-12 * max(1.0, abs(baseline_eca)):
        return 1.0
    return (alg_eca - baseline_eca) / gain


def exhaustive_optimum(instance: Instance, budget: float | None = None, cap: int = DEFAULT_CAP,
                       threads: int = 1) -> Solution:
    """Best feasible subset (ties: smaller cost, then lexicographic id tuple)."""
    sol, _ = exhaustive_search(instance, budget, cap, threads)
    return sol


def exhaustive_search(instance: Instance, budget: float | None = None, cap: int = DEFAULT_CAP,
                      threads: int = 1) -> tuple[Solution, int]:
    """Like :func:`exhaustive_optimum`, also returning the number of subsets scored."""
    budget = instance.budget if budget is None else budget
    if not budget >= 0:
        raise ValueError(f"budget must be >= 0, got {budget!r}")
    _check_cap(instance, cap)
    best, count = _enumerate(instance, [budget], threads)
    return evaluate(instance, best[0][2]), count


def budget_sweep(instance: Instance, budgets, cap: int = DEFAULT_CAP, threads: int = 1) -> OracleReport:
    """Optimum and all four heuristics at every budget, with gain ratios."""
    budgets = [float(b) for b in budgets]
    if not budgets:
        raise ValueError("budget_sweep needs at least one budget")
    if any(not b >= 0 for b in budgets):
        raise ValueError("budgets must be >= 0")
    _check_cap(instance, cap)
    best, count = _enumerate(instance, budgets, threads)
    base = evaluate(instance, ()).eca
    rows = []
    opt_solutions = []
    for b, cand in zip(budgets, best):
        opt = evaluate(instance, cand[2])
        opt_solutions.append(opt)
        ecas, ratios = {}, {}
        for h in HEURISTICS:
            sol, _ = greedy.run(h, instance, b, threads=threads)
            ecas[h] = sol.eca
            ratios[h] = gain_ratio(sol.eca, opt.eca, base)
        rows.append(SweepRow(b, opt.eca, ecas, ratios))
    top = max(range(len(budgets)), key=lambda i: (budgets[i], -i))
    return OracleReport(opt_solutions[top], count, base, rows)
