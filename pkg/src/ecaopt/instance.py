"""Problem data model: vertices, arcs, improvement options and scenarios.

An :class:`Instance` is immutable once built.  Algorithms work on the
integer-indexed arrays it exposes (``arc_source``, ``arc_length`` ...), while
users address vertices, arcs and options by their string ids.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np


class InstanceError(ValueError):
    """Raised for malformed or semantically invalid instance data."""


@dataclass(frozen=True)
class VertexImprovement:
    weight: float
    cost: float


@dataclass(frozen=True)
class ArcImprovement:
    probability: float
    cost: float


@dataclass(frozen=True)
class Vertex:
    id: str
    weight: float
    improvement: VertexImprovement | None = None


@dataclass(frozen=True)
class Arc:
    """A directed arc.

    ``option`` is the id of the improvement option controlling this arc (the
    arc id itself, or the parent edge id for arcs expanded from an undirected
    edge).  ``edge`` records that parent edge so the instance can be written
    back in its original shape.
    """

    id: str
    source: str
    target: str
    probability: float
    improvement: ArcImprovement | None = None
    edge: str | None = None

    @property
    def option(self) -> str | None:
        if self.improvement is None:
            return None
        return self.edge if self.edge is not None else self.id


@dataclass(frozen=True)
class Option:
    """One purchasable improvement: an arc (or edge pair) or a vertex."""

    id: str
    kind: str  # "arc" or "vertex"
    cost: float
    arcs: tuple[int, ...] = ()
    vertex: int | None = None


def prob_to_length(p: float) -> float:
    if p <= 0.0:
        return math.inf
    return -math.log(p)


def _edge_arc_ids(edge_id: str) -> tuple[str, str]:
    return f"{edge_id}_fw", f"{edge_id}_bw"


@dataclass(frozen=True, eq=False)
class Instance:
    vertices: tuple[Vertex, ...]
    arcs: tuple[Arc, ...]
    budget: float = 0.0
    _options: tuple[Option, ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "arcs", tuple(self.arcs))
        self._validate()
        object.__setattr__(self, "_options", self._collect_options())

    # -- construction helpers -------------------------------------------------

    def _validate(self):
        if not (self.budget >= 0) or math.isinf(self.budget):
            raise InstanceError(f"budget must be a finite non-negative number, got {self.budget!r}")
        seen: set[str] = set()
        for v in self.vertices:
            if v.id in seen:
                raise InstanceError(f"duplicate vertex id {v.id!r}")
            seen.add(v.id)
            if not (v.weight >= 0) or math.isinf(v.weight):
                raise InstanceError(f"vertex {v.id!r}: weight must be finite and >= 0")
            if v.improvement is not None:
                if not v.improvement.weight >= v.weight or math.isinf(v.improvement.weight):
                    raise InstanceError(f"vertex {v.id!r}: improved weight must be >= weight")
                if not v.improvement.cost > 0 or math.isinf(v.improvement.cost):
                    raise InstanceError(f"vertex {v.id!r}: improvement cost must be > 0")
        vertex_ids = seen
        arc_ids: set[str] = set()
        for a in self.arcs:
            if a.id in arc_ids or a.id in vertex_ids:
                raise InstanceError(f"duplicate id {a.id!r}")
            arc_ids.add(a.id)
            for end in (a.source, a.target):
                if end not in vertex_ids:
                    raise InstanceError(f"arc {a.id!r}: dangling endpoint {end!r}")
            if a.source == a.target:
                raise InstanceError(f"arc {a.id!r}: self-loop")
            if not 0.0 <= a.probability <= 1.0:
                raise InstanceError(f"arc {a.id!r}: probability out of range [0, 1]: {a.probability!r}")
            if a.improvement is not None:
                p2 = a.improvement.probability
                if not 0.0 <= p2 <= 1.0:
                    raise InstanceError(f"arc {a.id!r}: improved probability out of range [0, 1]: {p2!r}")
                if not p2 > a.probability:
                    raise InstanceError(f"arc {a.id!r}: improved probability must exceed base probability")
                if not a.improvement.cost > 0 or math.isinf(a.improvement.cost):
                    raise InstanceError(f"arc {a.id!r}: improvement cost must be > 0")
        edge_ids = {a.edge for a in self.arcs if a.edge is not None}
        clash = edge_ids & (vertex_ids | arc_ids)
        if clash:
            raise InstanceError(f"duplicate id {sorted(clash)[0]!r}")

    def _collect_options(self) -> tuple[Option, ...]:
        options: list[Option] = []
        by_id: dict[str, int] = {}
        for i, a in enumerate(self.arcs):
            opt = a.option
            if opt is None:
                continue
            if opt in by_id:
                j = by_id[opt]
                prev = options[j]
                if prev.cost != a.improvement.cost:
                    raise InstanceError(f"option {opt!r}: arcs sharing an option must share its cost")
                options[j] = Option(opt, "arc", prev.cost, prev.arcs + (i,))
            else:
                by_id[opt] = len(options)
                options.append(Option(opt, "arc", a.improvement.cost, (i,)))
        for i, v in enumerate(self.vertices):
            if v.improvement is not None:
                options.append(Option(v.id, "vertex", v.improvement.cost, vertex=i))
        return tuple(options)

    # -- indexing ---------------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def m(self) -> int:
        return len(self.arcs)

    @property
    def options(self) -> tuple[Option, ...]:
        return self._options

    @cached_property
    def option_index(self) -> dict[str, int]:
        return {o.id: i for i, o in enumerate(self._options)}

    @cached_property
    def vertex_index(self) -> dict[str, int]:
        return {v.id: i for i, v in enumerate(self.vertices)}

    @cached_property
    def arc_index(self) -> dict[str, int]:
        return {a.id: i for i, a in enumerate(self.arcs)}

    @cached_property
    def arc_source(self) -> np.ndarray:
        idx = self.vertex_index
        return np.array([idx[a.source] for a in self.arcs], dtype=np.int64)

    @cached_property
    def arc_target(self) -> np.ndarray:
        idx = self.vertex_index
        return np.array([idx[a.target] for a in self.arcs], dtype=np.int64)

    @cached_property
    def arc_probability(self) -> np.ndarray:
        return np.array([a.probability for a in self.arcs], dtype=float)

    @cached_property
    def arc_improved_probability(self) -> np.ndarray:
        return np.array(
            [a.improvement.probability if a.improvement else a.probability for a in self.arcs],
            dtype=float,
        )

    @cached_property
    def arc_length(self) -> np.ndarray:
        """Upper lengths ``-log(pi)`` (``inf`` where ``pi == 0``)."""
        return np.array([prob_to_length(p) for p in self.arc_probability])

    @cached_property
    def arc_improved_length(self) -> np.ndarray:
        return np.array([prob_to_length(p) for p in self.arc_improved_probability])

    @cached_property
    def arc_option(self) -> np.ndarray:
        """Option index per arc, -1 for fixed arcs."""
        out = np.full(self.m, -1, dtype=np.int64)
        for k, o in enumerate(self._options):
            for i in o.arcs:
                out[i] = k
        return out

    @cached_property
    def weight(self) -> np.ndarray:
        return np.array([v.weight for v in self.vertices], dtype=float)

    @cached_property
    def improved_weight(self) -> np.ndarray:
        return np.array(
            [v.improvement.weight if v.improvement else v.weight for v in self.vertices], dtype=float
        )

    @cached_property
    def vertex_option(self) -> np.ndarray:
        out = np.full(self.n, -1, dtype=np.int64)
        for k, o in enumerate(self._options):
            if o.vertex is not None:
                out[o.vertex] = k
        return out

    @cached_property
    def option_cost(self) -> np.ndarray:
        return np.array([o.cost for o in self._options], dtype=float)

    @property
    def total_cost(self) -> float:
        return math.fsum(o.cost for o in self._options)

    # -- scenarios --------------------------------------------------------------

    def scenario(self, x: Iterable[str] | Mapping[str, int | bool] | None = None) -> np.ndarray:
        """Turn a selection into a boolean vector over :attr:`options`.

        ``x`` is either an iterable of selected option ids or a mapping
        ``option id -> 0/1`` covering exactly the instance's options.
        """
        out = np.zeros(len(self._options), dtype=bool)
        if x is None:
            return out
        if isinstance(x, np.ndarray):
            if x.shape != out.shape:
                raise InstanceError("scenario vector length does not match the option count")
            return x.astype(bool)
        idx = self.option_index
        if isinstance(x, Mapping):
            if set(x) != set(idx):
                unknown = sorted(set(x) - set(idx))
                if unknown:
                    raise InstanceError(f"unknown option id {unknown[0]!r}")
                raise InstanceError("scenario mapping must cover every option")
            for k, val in x.items():
                if val not in (0, 1, True, False):
                    raise InstanceError(f"option {k!r}: decision must be binary, got {val!r}")
                out[idx[k]] = bool(val)
            return out
        for k in x:
            if k not in idx:
                raise InstanceError(f"unknown option id {k!r}")
            out[idx[k]] = True
        return out

    def selected_ids(self, x: np.ndarray) -> list[str]:
        return [o.id for o, s in zip(self._options, x) if s]

    def with_budget(self, budget: float) -> "Instance":
        return Instance(self.vertices, self.arcs, budget)

    @cached_property
    def digest(self) -> str:
        payload = json.dumps(to_dict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.vertices, self.arcs, self.budget) == (other.vertices, other.arcs, other.budget)

    def __hash__(self):
        return hash((self.vertices, self.arcs, self.budget))


@dataclass(frozen=True)
class EffectiveGraph:
    """Arc lengths and vertex weights under one fixed scenario."""

    n: int
    source: np.ndarray
    target: np.ndarray
    length: np.ndarray
    weight: np.ndarray

    @property
    def probability(self) -> np.ndarray:
        return np.exp(-self.length)


def apply_scenario(instance: Instance, x=None) -> EffectiveGraph:
    """Lengths/weights with every selected option applied.

    Arcs whose option is selected carry ``-log(pi')``; the others keep
    ``-log(pi)``.  Vertices likewise take the improved weight.
    """
    sel = instance.scenario(x)
    opt = instance.arc_option
    on_arc = np.zeros(instance.m, dtype=bool)
    has = opt >= 0
    on_arc[has] = sel[opt[has]]
    length = np.where(on_arc, instance.arc_improved_length, instance.arc_length)
    vopt = instance.vertex_option
    on_vertex = np.zeros(instance.n, dtype=bool)
    vhas = vopt >= 0
    on_vertex[vhas] = sel[vopt[vhas]]
    weight = np.where(on_vertex, instance.improved_weight, instance.weight)
    return EffectiveGraph(instance.n, instance.arc_source, instance.arc_target, length, weight)


def scenario_cost(instance: Instance, x=None) -> float:
    sel = instance.scenario(x)
    return math.fsum(instance.option_cost[sel].tolist())


# -- JSON format ----------------------------------------------------------------


def _number(obj, key, where):
    if key not in obj:
        raise InstanceError(f"{where}: missing field {key!r}")
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise InstanceError(f"{where}: field {key!r} must be a number")
    return float(val)


def _ident(obj, key, where):
    if key not in obj:
        raise InstanceError(f"{where}: missing field {key!r}")
    val = obj[key]
    if not isinstance(val, str):
        raise InstanceError(f"{where}: field {key!r} must be a string")
    return val


def from_dict(data: Mapping) -> Instance:
    if not isinstance(data, Mapping):
        raise InstanceError("instance document must be a JSON object")
    vertices = []
    for i, v in enumerate(data.get("vertices", [])):
        where = f"vertices[{i}]"
        imp = None
        if v.get("improvement") is not None:
            imp = VertexImprovement(
                _number(v["improvement"], "weight", where + ".improvement"),
                _number(v["improvement"], "cost", where + ".improvement"),
            )
        vertices.append(Vertex(_ident(v, "id", where), _number(v, "weight", where), imp))
    arcs = []
    for section in ("arcs", "edges"):
        for i, a in enumerate(data.get(section, [])):
            where = f"{section}[{i}]"
            imp = None
            if a.get("improvement") is not None:
                imp = ArcImprovement(
                    _number(a["improvement"], "probability", where + ".improvement"),
                    _number(a["improvement"], "cost", where + ".improvement"),
                )
            aid = _ident(a, "id", where)
            src, dst = _ident(a, "from", where), _ident(a, "to", where)
            p = _number(a, "probability", where)
            if section == "arcs":
                arcs.append(Arc(aid, src, dst, p, imp))
            else:
                fwd, rev = _edge_arc_ids(aid)
                arcs.append(Arc(fwd, src, dst, p, imp, edge=aid))
                arcs.append(Arc(rev, dst, src, p, imp, edge=aid))
    budget = data.get("budget", 0.0)
    if isinstance(budget, bool) or not isinstance(budget, (int, float)):
        raise InstanceError("field 'budget' must be a number")
    return Instance(tuple(vertices), tuple(arcs), float(budget))


def parse_instance(text: str) -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return from_dict(data)


def load_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def to_dict(instance: Instance) -> dict:
    vertices = []
    for v in instance.vertices:
        d = {"id": v.id, "weight": v.weight}
        if v.improvement is not None:
            d["improvement"] = {"weight": v.improvement.weight, "cost": v.improvement.cost}
        vertices.append(d)
    arcs, edges, done = [], [], set()
    for a in instance.arcs:
        if a.edge is None:
            target = arcs
            d = {"id": a.id, "from": a.source, "to": a.target, "probability": a.probability}
        else:
            if a.edge in done:
                continue
            done.add(a.edge)
            target = edges
            d = {"id": a.edge, "from": a.source, "to": a.target, "probability": a.probability}
        if a.improvement is not None:
            d["improvement"] = {"probability": a.improvement.probability, "cost": a.improvement.cost}
        target.append(d)
    out = {"vertices": vertices, "arcs": arcs}
    if edges:
        out["edges"] = edges
    out["budget"] = instance.budget
    return out


def serialize_instance(instance: Instance) -> str:
    return json.dumps(to_dict(instance), indent=2)
