"""Generalized-flow MIP for budget-constrained ECA maximisation.

Each target ``t`` gets its own flow block: every vertex offers its weight as
supply, flow crossing an arc is multiplied by the arc probability, and the
amount collected at ``t`` is the contribution variable ``f.t``.  Improved
arc copies may only carry flow when the matching purchase binary is set
(big-M rows).  The objective is ECA squared, ``sum_t w_t f_t``.

No solver is embedded.  Models can be exported as LP or MPS text, solved by
any object implementing :class:`SolverBackend`, and checked with the
solver-free flow certificate in :func:`flow_certificate`.
"""

from __future__ import annotations

import copy
import heapq
import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Protocol

import numpy as np

from . import connectivity
from .instance import Instance, apply_scenario
from .preprocessing import TargetReduction
from .solution import Solution, evaluate, fits_budget


class ModelError(ValueError):
    pass


# -- linear programs -------------------------------------------------------------


@dataclass
class Variable:
    name: str
    lb: float = 0.0
    ub: float = math.inf
    binary: bool = False


@dataclass
class Constraint:
    name: str
    coeffs: dict[str, float]
    sense: str  # "<=", "=", ">="
    rhs: float


@dataclass
class LinearProgram:
    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[str, float] = field(default_factory=dict)
    sense: str = "max"

    def __post_init__(self):
        self._names = {v.name for v in self.variables}

    def add_var(self, name, lb=0.0, ub=math.inf, binary=False) -> str:
        if name in self._names:
            raise ModelError(f"variable name collision: {name!r}")
        if binary:
            lb, ub = 0.0, 1.0
        self.variables.append(Variable(name, lb, ub, binary))
        self._names.add(name)
        return name

    def add_row(self, name, coeffs: Mapping[str, float], sense, rhs) -> Constraint:
        if sense not in ("<=", "=", ">="):
            raise ModelError(f"bad constraint sense {sense!r}")
        for k in coeffs:
            if k not in self._names:
                raise ModelError(f"row {name!r} references undeclared variable {k!r}")
        row = Constraint(name, {k: float(c) for k, c in coeffs.items() if c != 0.0}, sense, float(rhs))
        self.constraints.append(row)
        return row

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_rows(self) -> int:
        return len(self.constraints)

    @property
    def num_nonzeros(self) -> int:
        return sum(len(r.coeffs) for r in self.constraints)

    @property
    def binaries(self) -> list[str]:
        return [v.name for v in self.variables if v.binary]

    def objective_value(self, assignment: Mapping[str, float]) -> float:
        return math.fsum(c * assignment.get(k, 0.0) for k, c in self.objective.items())

    def violations(self, assignment: Mapping[str, float], tol: float = 1e-9) -> list[str]:
        """Names of rows/bounds violated by ``assignment`` beyond ``tol`` (relative)."""
        bad = []
        for v in self.variables:
            val = assignment.get(v.name, 0.0)
            if val < v.lb - tol * max(1.0, abs(v.lb)) or val > v.ub + tol * max(1.0, abs(v.ub)):
                bad.append(v.name)
        for r in self.constraints:
            terms = [c * assignment.get(k, 0.0) for k, c in r.coeffs.items()]
            lhs = math.fsum(terms)
            scale = max([1.0, abs(r.rhs)] + [abs(x) for x in terms])
            slack = tol * scale
            if (r.sense == "<=" and lhs > r.rhs + slack) or (r.sense == ">=" and lhs < r.rhs - slack) \
                    or (r.sense == "=" and abs(lhs - r.rhs) > slack):
                bad.append(r.name)
        return bad


# -- model metadata ----------------------------------------------------------------


@dataclass(frozen=True)
class VarRole:
    kind: str                 # flow | flow_improved | purchase | vertex_purchase | contribution | linearization
    target: str | None = None
    arc: str | None = None
    option: str | None = None
    vertex: str | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass(frozen=True)
class RowRole:
    kind: str                 # B1 | B2 | B3 | B4 | MC1 | MC2 | A1 | A2
    target: str | None = None
    vertex: str | None = None
    arc: str | None = None
    supply: tuple[tuple[int, float], ...] = ()   # (original vertex, factor) merged in this row


@dataclass
class MipModel:
    lp: LinearProgram
    instance: Instance
    budget: float
    roles: dict[str, VarRole]
    row_roles: dict[str, RowRole]
    reduced: bool = False
    vertex_extended: bool = False
    provenance: dict[str, dict] = field(default_factory=dict)

    @property
    def size(self) -> dict[str, int]:
        return {"variables": self.lp.num_vars, "constraints": self.lp.num_rows,
                "nonzeros": self.lp.num_nonzeros}

    def option_var(self, option_id: str) -> str:
        o = self.instance.options[self.instance.option_index[option_id]]
        return ("y." if o.kind == "vertex" else "x.") + sanitize(o.id)

    def metadata(self) -> dict:
        return {
            "instance_digest": self.instance.digest,
            "budget": self.budget,
            "reduced": self.reduced,
            "vertex_extended": self.vertex_extended,
            "size": self.size,
            "variables": {v.name: self.roles[v.name].to_dict() for v in self.lp.variables},
        }


_BAD = re.compile(r"[^A-Za-z0-9_]")


def sanitize(ident: str) -> str:
    return _BAD.sub("_", ident)


# -- single-target LP --------------------------------------------------------------


def build_single_target_lp(g, t: int, arc_names=None) -> LinearProgram:
    """Generalized-flow LP whose optimum is ``f_t`` on a fixed graph."""
    g = connectivity.as_graph(g)
    if not 0 <= t < g.n:
        raise ModelError(f"target {t} not in graph")
    names = arc_names or [str(i) for i in range(len(g.source))]
    lp = LinearProgram()
    flows = [lp.add_var(f"phi.{sanitize(a)}") for a in names]
    z = lp.add_var("z")
    rows: list[dict[str, float]] = [dict() for _ in range(g.n)]
    prob = np.exp(-g.length)
    for var, s, d, p in zip(flows, g.source.tolist(), g.target.tolist(), prob.tolist()):
        rows[s][var] = rows[s].get(var, 0.0) + 1.0
        rows[d][var] = rows[d].get(var, 0.0) - p
    for u in range(g.n):
        if u != t:
            lp.add_row(f"a1.{u}", rows[u], "<=", g.weight[u])
    rows[t][z] = 1.0
    lp.add_row("a2", rows[t], "=", g.weight[t])
    lp.objective = {z: 1.0}
    return lp


# -- BC-ECA MIP ---------------------------------------------------------------------


def big_m(instance: Instance, arc: int | str, _cache=None) -> float:
    """Upper bound on the flow an improved arc copy can carry.

    All the flow entering an arc leaves its source vertex, which can collect
    at most ``sum_s w+_s Pi+_{s,source}`` with every improvement applied.
    """
    a = instance.arc_index[arc] if isinstance(arc, str) else arc
    src = int(instance.arc_source[a])
    if _cache is not None and src in _cache:
        return _cache[src]
    best = apply_scenario(instance, np.ones(len(instance.options), dtype=bool))
    m = connectivity.f_t(best, src)
    if _cache is not None:
        _cache[src] = m
    return m


@dataclass(frozen=True)
class _BlockArc:
    arc: int
    source: int
    target: int
    prob: float
    prob_improved: float | None
    option: int


def _block(instance: Instance, t: int, red: TargetReduction | None):
    """Vertices, supply terms and arcs of the flow block for target ``t``."""
    if red is None:
        verts = tuple(range(instance.n))
        terms = {v: ((v, 1.0),) for v in verts}
        arcs = []
        for a in range(instance.m):
            k = int(instance.arc_option[a])
            arcs.append(_BlockArc(a, int(instance.arc_source[a]), int(instance.arc_target[a]),
                                  float(instance.arc_probability[a]),
                                  float(instance.arc_improved_probability[a]) if k >= 0 else None, k))
        return verts, terms, arcs
    if red.target != t or red.vertex_map.get(t) != t:
        raise ModelError(f"inconsistent reduction for target {t}: vertex map does not keep the target")
    arcs = [_BlockArc(ra.arc, ra.source, ra.target, math.exp(-ra.upper),
                      math.exp(-ra.lower) if ra.option >= 0 else None, ra.option)
            for ra in red.arcs]
    return red.vertices, red.weight_terms, arcs


def build_bceca_mip(instance: Instance, reductions: Mapping[int, TargetReduction] | None = None,
                    budget: float | None = None) -> MipModel:
    """One flow block per target (reduced when ``reductions`` is given), shared purchase binaries."""
    budget = instance.budget if budget is None else budget
    lp = LinearProgram()
    roles: dict[str, VarRole] = {}
    row_roles: dict[str, RowRole] = {}
    vid = [v.id for v in instance.vertices]
    sv = [sanitize(v) for v in vid]
    aid = [a.id for a in instance.arcs]
    sa = [sanitize(a) for a in aid]

    xvar: dict[int, str] = {}
    for k, o in enumerate(instance.options):
        if o.kind == "arc":
            xvar[k] = lp.add_var(f"x.{sanitize(o.id)}", binary=True)
            roles[xvar[k]] = VarRole("purchase", option=o.id)

    mcache: dict[int, float] = {}
    objective: dict[str, float] = {}
    provenance = {}
    for t in range(instance.n):
        if reductions is not None and t not in reductions:
            raise ModelError(f"inconsistent reduction: no entry for target {vid[t]!r}")
        red = reductions[t] if reductions is not None else None
        verts, terms, arcs = _block(instance, t, red)
        rows: dict[int, dict[str, float]] = {v: {} for v in verts}
        b3 = []
        for ba in arcs:
            name = lp.add_var(f"phi.{sv[t]}.{sa[ba.arc]}")
            roles[name] = VarRole("flow", target=vid[t], arc=aid[ba.arc])
            copies = [(name, ba.prob)]
            if ba.prob_improved is not None:
                cname = lp.add_var(f"psi.{sv[t]}.{sa[ba.arc]}")
                roles[cname] = VarRole("flow_improved", target=vid[t], arc=aid[ba.arc],
                                       option=instance.options[ba.option].id)
                copies.append((cname, ba.prob_improved))
                b3.append((cname, ba))
            for var, p in copies:
                rows[ba.source][var] = rows[ba.source].get(var, 0.0) + 1.0
                rows[ba.target][var] = rows[ba.target].get(var, 0.0) - p
        fname = lp.add_var(f"f.{sv[t]}")
        roles[fname] = VarRole("contribution", target=vid[t])
        for v in verts:
            supply = terms[v]
            base = math.fsum(instance.weight[u] * f for u, f in supply)
            if v == t:
                continue
            rname = f"b1.{sv[t]}.{sv[v]}"
            lp.add_row(rname, rows[v], "<=", base)
            row_roles[rname] = RowRole("B1", vid[t], vid[v], supply=tuple(supply))
        supply = terms[t]
        base = math.fsum(instance.weight[u] * f for u, f in supply)
        rows[t][fname] = 1.0
        rname = f"b2.{sv[t]}"
        lp.add_row(rname, rows[t], "=", base)
        row_roles[rname] = RowRole("B2", vid[t], vid[t], supply=tuple(supply))
        for cname, ba in b3:
            m = big_m(instance, ba.arc, mcache)
            rname = f"b3.{sv[t]}.{sa[ba.arc]}"
            lp.add_row(rname, {cname: 1.0, xvar[ba.option]: -m}, "<=", 0.0)
            row_roles[rname] = RowRole("B3", vid[t], arc=aid[ba.arc])
        if instance.weight[t] != 0.0:
            objective[fname] = float(instance.weight[t])
        provenance[vid[t]] = {"vertices": len(verts), "arcs": len(arcs), "improved_copies": len(b3)}

    lp.add_row("b4", {xvar[k]: instance.options[k].cost for k in sorted(xvar)}, "<=", budget)
    row_roles["b4"] = RowRole("B4")
    lp.objective = objective
    return MipModel(lp, instance, float(budget), roles, row_roles,
                    reduced=reductions is not None, provenance=provenance)


def extend_vertex_improvements(model: MipModel, instance: Instance | None = None) -> MipModel:
    """Add vertex purchases ``y_u`` with a McCormick-linearised objective.

    Supplies ``w_u`` become ``w_u + y_u (w+_u - w_u)`` (scaled by the
    contraction factor in reduced blocks); the objective term ``w_t f_t``
    gains ``(w+_t - w_t) f'_t`` with ``f'_t <= f_t`` and ``f'_t <= M y_t``.
    """
    instance = instance or model.instance
    if model.vertex_extended:
        raise ModelError("vertex improvements already added to this model")
    vopts = [(k, o) for k, o in enumerate(instance.options) if o.kind == "vertex"]
    if not vopts:
        return model
    lp = copy.deepcopy(model.lp)
    lp._names = {v.name for v in lp.variables}
    roles = dict(model.roles)
    delta = instance.improved_weight - instance.weight
    yvar: dict[int, str] = {}
    for k, o in vopts:
        yvar[o.vertex] = lp.add_var(f"y.{sanitize(o.id)}", binary=True)
        roles[yvar[o.vertex]] = VarRole("vertex_purchase", option=o.id, vertex=o.id)
    for row in lp.constraints:
        rr = model.row_roles.get(row.name)
        if rr is None or rr.kind not in ("B1", "B2"):
            continue
        for u, factor in rr.supply:
            if u in yvar and delta[u] != 0.0:
                row.coeffs[yvar[u]] = row.coeffs.get(yvar[u], 0.0) - factor * float(delta[u])
    b4 = next(r for r in lp.constraints if r.name == "b4")
    for k, o in vopts:
        b4.coeffs[yvar[o.vertex]] = o.cost
    big = math.fsum(instance.improved_weight.tolist())
    row_roles = dict(model.row_roles)
    for k, o in vopts:
        t = o.vertex
        st = sanitize(instance.vertices[t].id)
        fp = lp.add_var(f"fp.{st}")
        roles[fp] = VarRole("linearization", target=instance.vertices[t].id)
        lp.objective[fp] = float(delta[t])
        lp.add_row(f"mc1.{st}", {fp: 1.0, f"f.{st}": -1.0}, "<=", 0.0)
        lp.add_row(f"mc2.{st}", {fp: 1.0, yvar[t]: -big}, "<=", 0.0)
        row_roles[f"mc1.{st}"] = RowRole("MC1", instance.vertices[t].id)
        row_roles[f"mc2.{st}"] = RowRole("MC2", instance.vertices[t].id)
    return MipModel(lp, instance, model.budget, roles, row_roles, model.reduced, True,
                    dict(model.provenance))


def build_model(instance: Instance, reductions=None, budget=None) -> MipModel:
    """Full model: arc purchases plus vertex purchases when the instance has any."""
    model = build_bceca_mip(instance, reductions, budget)
    if any(o.kind == "vertex" for o in instance.options):
        model = extend_vertex_improvements(model, instance)
    return model


def model_dimensions(instance: Instance, reductions=None) -> dict[str, int]:
    """Size of :func:`build_bceca_mip` without materialising the rows.

    Variables: ``sum_t (|A_t| + |Psi_t|) + |Phi| + |V|``.
    """
    nvars = sum(1 for o in instance.options if o.kind == "arc") + instance.n
    nrows = 1
    nnz = sum(1 for o in instance.options if o.kind == "arc")
    mvals: dict[int, float] = {}
    for t in range(instance.n):
        red = reductions[t] if reductions is not None else None
        verts, _, arcs = _block(instance, t, red)
        nrows += len(verts)
        nnz += 1  # f.t in B2
        for ba in arcs:
            nvars += 1
            nnz += 1 + (ba.prob != 0.0)
            if ba.prob_improved is not None:
                nvars += 1
                nrows += 1
                nnz += 3 + (big_m(instance, ba.arc, mvals) != 0.0)
    return {"variables": nvars, "constraints": nrows, "nonzeros": nnz}


# -- solver-free evaluation ----------------------------------------------------------


def _columns(lp: LinearProgram) -> dict[str, list[tuple[str, float]]]:
    cols: dict[str, list[tuple[str, float]]] = {v.name: [] for v in lp.variables}
    for r in lp.constraints:
        for k, c in r.coeffs.items():
            cols[k].append((r.name, c))
    return cols


def flow_certificate(model: MipModel, binaries: Mapping[str, float]) -> dict[str, float]:
    """A full assignment routing every supply along most reliable paths.

    The block graphs are read back from the model rows: a flow column with
    ``+1`` in the row of vertex ``a`` and ``-p`` in the row of ``b`` is an arc
    ``a -> b`` of multiplier ``p``; an improved copy is usable when the
    binary in its big-M row is set.  The returned assignment is feasible and
    optimal for the continuous part given ``binaries``.
    """
    lp = model.lp
    rows = {r.name: r for r in lp.constraints}
    cols = _columns(lp)
    values = {name: float(round(binaries.get(name, 0.0))) for name in lp.binaries}
    binset = set(values)
    by_target: dict[str, list[str]] = {}
    for name, role in model.roles.items():
        if role.kind in ("flow", "flow_improved"):
            by_target.setdefault(role.target, []).append(name)

    for v in model.instance.vertices:
        t = v.id
        block_rows = [name for name, rr in model.row_roles.items()
                      if rr.kind in ("B1", "B2") and rr.target == t]
        index = {name: i for i, name in enumerate(block_rows)}
        tidx = index[f"b2.{sanitize(t)}"]
        supply = []
        for name in block_rows:
            r = rows[name]
            extra = math.fsum(c * values[k] for k, c in r.coeffs.items() if k in binset)
            supply.append(r.rhs - extra)
        radj: list[list[tuple[int, float, str, float]]] = [[] for _ in block_rows]
        for var in by_target.get(t, []):
            tail = head = None
            p = 0.0
            enabled = True
            for rname, c in cols[var]:
                rr = model.row_roles[rname]
                if rr.kind == "B3":
                    other = next(k for k in rows[rname].coeffs if k != var)
                    enabled = values[other] > 0.5
                elif c > 0 and rname in index and tail is None:
                    tail = index[rname]
                elif rname in index:
                    head, p = index[rname], -c
            values[var] = 0.0
            if enabled and head is not None and p > 0.0:
                radj[head].append((tail, -math.log(p), var, p))
        # reverse Dijkstra from the target, remembering the tree arc used
        dist = [math.inf] * len(block_rows)
        via: list[tuple[int, str, float] | None] = [None] * len(block_rows)
        dist[tidx] = 0.0
        order = []
        done = [False] * len(block_rows)
        heap = [(0.0, tidx)]
        while heap:
            d, h = heapq.heappop(heap)
            if done[h]:
                continue
            done[h] = True
            order.append(h)
            for tail, l, var, p in radj[h]:
                if d + l < dist[tail]:
                    dist[tail] = d + l
                    via[tail] = (h, var, p)
                    heapq.heappush(heap, (d + l, tail))
        inflow = [0.0] * len(block_rows)
        for s in reversed(order):
            if s == tidx:
                continue
            h, var, p = via[s]
            values[var] = supply[s] + inflow[s]
            inflow[h] += values[var] * p
        values[f"f.{sanitize(t)}"] = supply[tidx] + inflow[tidx]
    for name, role in model.roles.items():
        if role.kind == "linearization":
            st = sanitize(role.target)
            values[name] = values[f"f.{st}"] if values.get(f"y.{st}", 0.0) > 0.5 else 0.0
    return values


def evaluate_assignment(model: MipModel, binaries: Mapping[str, float]) -> float:
    """Objective of the best completion of ``binaries`` (via the flow certificate)."""
    return model.lp.objective_value(flow_certificate(model, binaries))


def _budget_ok(model: MipModel, binaries: Mapping[str, float]) -> bool:
    b4 = next(r for r in model.lp.constraints if r.name == "b4")
    lhs = math.fsum(c * binaries.get(k, 0.0) for k, c in b4.coeffs.items())
    return lhs <= b4.rhs + 1e-9 * max(1.0, abs(b4.rhs))


# -- solver backends -------------------------------------------------------------------


class SolverBackend(Protocol):
    def solve(self, model: MipModel) -> dict[str, float]:
        """Return a value for every model variable."""


class EnumerationBackend:
    """Reference backend: try every budget-feasible binary vector.

    The continuous part of each candidate is completed with
    :func:`flow_certificate`.  Ties go to the cheaper, then lexicographically
    smaller, selection.
    """

    def __init__(self, max_binaries: int = 22):
        self.max_binaries = max_binaries

    def solve(self, model: MipModel) -> dict[str, float]:
        names = model.lp.binaries
        if len(names) > self.max_binaries:
            raise ModelError(f"{len(names)} binaries exceed the enumeration cap {self.max_binaries}")
        b4 = next(r for r in model.lp.constraints if r.name == "b4")
        best = None
        for bits in itertools.product((0, 1), repeat=len(names)):
            binaries = dict(zip(names, map(float, bits)))
            if not _budget_ok(model, binaries):
                continue
            values = flow_certificate(model, binaries)
            obj = model.lp.objective_value(values)
            cost = math.fsum(c * binaries.get(k, 0.0) for k, c in b4.coeffs.items())
            chosen = tuple(sorted(k for k, b in binaries.items() if b))
            if best is None or _better(obj, cost, chosen, best):
                best = (obj, cost, chosen, values)
        return best[3]


def _better(obj, cost, chosen, best) -> bool:
    bobj, bcost, bchosen, _ = best
    tol = 1e-12 * max(1.0, abs(bobj))
    if obj > bobj + tol:
        return True
    if obj < bobj - tol:
        return False
    if cost != bcost:
        return cost < bcost
    return chosen < bchosen


class ScipyBackend:
    """Adapter for :func:`scipy.optimize.milp` (HiGHS)."""

    def __init__(self, time_limit: float | None = None):
        self.time_limit = time_limit

    def solve(self, model: MipModel) -> dict[str, float]:
        from scipy.optimize import Bounds, LinearConstraint, milp
        from scipy.sparse import coo_matrix

        lp = model.lp
        index = {v.name: i for i, v in enumerate(lp.variables)}
        c = np.zeros(lp.num_vars)
        for k, coef in lp.objective.items():
            c[index[k]] = -coef
        ri, ci, vals, lo, hi = [], [], [], [], []
        for i, r in enumerate(lp.constraints):
            for k, coef in r.coeffs.items():
                ri.append(i)
                ci.append(index[k])
                vals.append(coef)
            lo.append(r.rhs if r.sense in ("=", ">=") else -np.inf)
            hi.append(r.rhs if r.sense in ("=", "<=") else np.inf)
        a = coo_matrix((vals, (ri, ci)), shape=(lp.num_rows, lp.num_vars)).tocsr()
        integrality = np.array([1 if v.binary else 0 for v in lp.variables])
        bounds = Bounds([v.lb for v in lp.variables], [v.ub for v in lp.variables])
        options = {"time_limit": self.time_limit} if self.time_limit else {}
        res = milp(c, constraints=LinearConstraint(a, lo, hi), integrality=integrality,
                   bounds=bounds, options=options)
        if res.x is None:
            raise ModelError(f"solver failed: {res.message}")
        return {v.name: float(res.x[i]) for i, v in enumerate(lp.variables)}


# -- decoding ----------------------------------------------------------------------------


def decode_solution(model: MipModel, assignment: Mapping[str, float], rel_tol: float = 1e-6) -> Solution:
    """Selected options of an assignment, re-scored from scratch and cross-checked."""
    instance = model.instance
    selected = []
    for o in instance.options:
        var = model.option_var(o.id)
        if var not in model.roles:
            continue
        if var not in assignment:
            raise ModelError(f"assignment lacks binary {var!r}")
        val = assignment[var]
        if min(abs(val), abs(val - 1.0)) > 1e-6:
            raise ModelError(f"binary {var!r} is fractional ({val!r})")
        if val > 0.5:
            selected.append(o.id)
    sol = evaluate(instance, selected, with_f_t=True)
    if not fits_budget(sol.cost, model.budget):
        raise ModelError(f"decoded selection costs {sol.cost} > budget {model.budget}")
    obj = model.lp.objective_value(assignment)
    if abs(obj - sol.eca_squared) > rel_tol * max(1.0, abs(sol.eca_squared)):
        raise ModelError(f"objective {obj!r} disagrees with recomputed ECA^2 {sol.eca_squared!r}")
    return sol


def solve(model: MipModel, backend: SolverBackend | None = None) -> Solution:
    backend = backend or EnumerationBackend()
    return decode_solution(model, backend.solve(model))


# -- text formats -------------------------------------------------------------------


def _num(x: float) -> str:
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    return repr(float(x))


def _linear(coeffs: Mapping[str, float]) -> list[str]:
    parts = []
    for i, (k, c) in enumerate(coeffs.items()):
        sign = "-" if c < 0 else "+"
        if i == 0 and sign == "+":
            parts.append(f"{_num(abs(c))} {k}")
        else:
            parts.append(f"{sign} {_num(abs(c))} {k}")
    return parts


def _wrap(head: str, parts: list[str], tail: str = "", width: int = 200) -> list[str]:
    lines, cur = [], head
    for p in parts + ([tail] if tail else []):
        if len(cur) + 1 + len(p) > width and cur.strip():
            lines.append(cur)
            cur = "   " + p
        else:
            cur = f"{cur} {p}" if cur else p
    lines.append(cur)
    return lines


def emit_lp_format(model: MipModel | LinearProgram) -> str:
    lp = model.lp if isinstance(model, MipModel) else model
    out = ["\\ generalized-flow ECA model", "Maximize" if lp.sense == "max" else "Minimize"]
    out += _wrap(" obj:", _linear(lp.objective))
    if lp.constraints:
        out.append("Subject To")
        for r in lp.constraints:
            parts = _linear(r.coeffs)
            if not parts and lp.variables:
                parts = ["0 " + lp.variables[0].name]
            out += _wrap(f" {r.name}:", parts, f"{r.sense} {_num(r.rhs)}")
    bounds = [v for v in lp.variables if not v.binary and (v.lb != 0.0 or v.ub != math.inf)]
    if bounds:
        out.append("Bounds")
        for v in bounds:
            if v.lb == -math.inf and v.ub == math.inf:
                out.append(f" {v.name} free")
            else:
                out.append(f" {_num(v.lb)} <= {v.name} <= {_num(v.ub)}")
    bins = lp.binaries
    if bins:
        out.append("Binaries")
        out += _wrap("", bins)
    out.append("End")
    return "\n".join(out) + "\n"


_SECTIONS = {
    "maximize": "obj", "maximum": "obj", "max": "obj",
    "minimize": "obj", "minimum": "obj", "min": "obj",
    "subject to": "rows", "such that": "rows", "st": "rows", "s.t.": "rows",
    "bounds": "bounds", "binaries": "bin", "binary": "bin", "bin": "bin",
    "generals": "gen", "general": "gen", "end": "end",
}


def _parse_linear(tokens: list[str]) -> dict[str, float]:
    coeffs: dict[str, float] = {}
    sign, num = 1.0, None
    for tok in tokens:
        if tok in ("+", "-"):
            sign = -1.0 if tok == "-" else 1.0
            continue
        try:
            num = float(tok)
            continue
        except ValueError:
            pass
        coef = sign * (num if num is not None else 1.0)
        coeffs[tok] = coeffs.get(tok, 0.0) + coef
        sign, num = 1.0, None
    return {k: c for k, c in coeffs.items() if c != 0.0}


_STATEMENT = re.compile(r"^\s*[^\s:+\-]+\s*:")


def parse_lp_format(text: str) -> LinearProgram:
    """Read back the LP dialect written by :func:`emit_lp_format`."""
    lp = LinearProgram()
    section = None
    statements: dict[str, list[str]] = {"obj": [], "rows": [], "bounds": [], "bin": []}
    cur: list[str] = []

    def flush():
        if cur and section in statements:
            statements[section].append(" ".join(cur))
        cur.clear()

    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].rstrip()
        if not line.strip():
            continue
        key = line.strip().lower()
        if key in _SECTIONS:
            flush()
            section = _SECTIONS[key]
            if key.startswith("min"):
                lp.sense = "min"
            continue
        if section in ("bounds", "bin") or (section == "rows" and _STATEMENT.match(line)):
            flush()
        cur.append(line.strip())
    flush()

    seen: dict[str, None] = {}

    def declare(names):
        for k in names:
            seen.setdefault(k, None)

    obj = " ".join(statements["obj"])
    if ":" in obj:
        obj = obj.split(":", 1)[1]
    lp.objective = _parse_linear(obj.split())
    declare(lp.objective)
    rows = []
    for stmt in statements["rows"]:
        name, body = stmt.split(":", 1)
        m = re.search(r"(<=|>=|=<|=>|=|<|>)\s*(\S+)\s*$", body)
        if m is None:
            raise ModelError(f"cannot parse row {name!r}")
        sense = {"<": "<=", "=<": "<=", ">": ">=", "=>": ">="}.get(m.group(1), m.group(1))
        coeffs = _parse_linear(body[:m.start()].split())
        declare(coeffs)
        rows.append(Constraint(name.strip(), coeffs, sense, float(m.group(2))))
    bounds = {}
    for stmt in statements["bounds"]:
        toks = stmt.split()
        if len(toks) == 2 and toks[1].lower() == "free":
            bounds[toks[0]] = (-math.inf, math.inf)
        elif len(toks) == 5:
            bounds[toks[2]] = (float(toks[0]), float(toks[4]))
        else:
            raise ModelError(f"unsupported bound {stmt!r}")
        declare([toks[0] if len(toks) == 2 else toks[2]])
    bins = set()
    for stmt in statements["bin"]:
        bins.update(stmt.split())
        declare(stmt.split())
    for name in seen:
        lb, ub = bounds.get(name, (0.0, math.inf))
        lp.add_var(name, lb, ub, binary=name in bins)
    lp.constraints = rows
    return lp


def emit_mps_format(model: MipModel | LinearProgram, name: str = "ECAOPT") -> str:
    """Free-format MPS with the same content as :func:`emit_lp_format`."""
    lp = model.lp if isinstance(model, MipModel) else model
    kind = {"<=": "L", ">=": "G", "=": "E"}
    out = [f"NAME {name}", "OBJSENSE", "    MAX" if lp.sense == "max" else "    MIN", "ROWS", " N obj"]
    out += [f" {kind[r.sense]} {r.name}" for r in lp.constraints]
    cols = _columns(lp)
    out.append("COLUMNS")
    in_int = False
    for v in lp.variables:
        if v.binary != in_int:
            out.append("    MARKER 'MARKER' " + ("'INTORG'" if v.binary else "'INTEND'"))
            in_int = v.binary
        entries = []
        if v.name in lp.objective:
            entries.append(("obj", lp.objective[v.name]))
        entries += cols[v.name]
        if not entries:
            out.append(f"    {v.name} obj 0.0")
        for rname, c in entries:
            out.append(f"    {v.name} {rname} {_num(c)}")
    if in_int:
        out.append("    MARKER 'MARKER' 'INTEND'")
    out.append("RHS")
    out += [f"    RHS {r.name} {_num(r.rhs)}" for r in lp.constraints if r.rhs != 0.0]
    out.append("BOUNDS")
    for v in lp.variables:
        if v.binary:
            out.append(f" BV BND {v.name}")
        elif v.lb == -math.inf and v.ub == math.inf:
            out.append(f" FR BND {v.name}")
        else:
            if v.lb != 0.0:
                out.append(f" LO BND {v.name} {_num(v.lb)}")
            if v.ub != math.inf:
                out.append(f" UP BND {v.name} {_num(v.ub)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def parse_mps_format(text: str) -> LinearProgram:
    lp = LinearProgram()
    section = None
    senses: dict[str, str] = {}
    order: list[str] = []
    coeffs: dict[str, dict[str, float]] = {}
    rhs: dict[str, float] = {}
    var_order: list[str] = []
    binary: set[str] = set()
    bounds: dict[str, list[float]] = {}
    in_int = False
    for raw in text.splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        toks = raw.split()
        if not raw[0].isspace():
            section = toks[0].upper()
            continue
        if section == "OBJSENSE":
            lp.sense = "max" if toks[0].upper().startswith("MAX") else "min"
        elif section == "ROWS":
            if toks[0] != "N":
                senses[toks[1]] = {"L": "<=", "G": ">=", "E": "="}[toks[0]]
                order.append(toks[1])
                coeffs[toks[1]] = {}
        elif section == "COLUMNS":
            if len(toks) >= 3 and toks[1] == "'MARKER'":
                in_int = "'INTORG'" in toks[2]
                continue
            var = toks[0]
            if not var_order or var_order[-1] != var:
                var_order.append(var)
                if in_int:
                    binary.add(var)
            for rname, val in zip(toks[1::2], toks[2::2]):
                if rname == "obj":
                    if float(val) != 0.0:
                        lp.objective[var] = float(val)
                else:
                    coeffs[rname][var] = float(val)
        elif section == "RHS":
            for rname, val in zip(toks[1::2], toks[2::2]):
                rhs[rname] = float(val)
        elif section == "BOUNDS":
            kind, var = toks[0], toks[2]
            b = bounds.setdefault(var, [0.0, math.inf])
            if kind == "BV":
                binary.add(var)
            elif kind == "FR":
                b[:] = [-math.inf, math.inf]
            elif kind == "LO":
                b[0] = float(toks[3])
            elif kind == "UP":
                b[1] = float(toks[3])
    for var in var_order:
        lb, ub = bounds.get(var, (0.0, math.inf))
        lp.add_var(var, lb, ub, binary=var in binary)
    lp.constraints = [Constraint(r, coeffs[r], senses[r], rhs.get(r, 0.0)) for r in order]
    return lp
