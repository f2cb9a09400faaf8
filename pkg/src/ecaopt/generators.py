"""Instance generators: adversarial spiders for the greedy heuristics and
random geometric landscapes.

In the spiders every edge is undirected (two arcs, one option), has base
probability 0, improved probability 1 and unit cost, so the baseline ECA^2
is exactly the sum of squared weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .instance import Instance, InstanceError, from_dict

FAMILIES = ("ig_bad", "dg_bad", "both_bad", "random")


@dataclass(frozen=True)
class GeneratorParams:
    family: str
    k: int = 2
    epsilon: float = 0.01
    n: int = 200
    mean_degree: float = 6.0
    p: float = 0.2
    seed: int = 0
    budget: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {', '.join(FAMILIES)}")
        if self.family == "random":
            if self.n < 2:
                raise ValueError("random instances need n >= 2")
            if not 0.0 <= self.p <= 1.0:
                raise ValueError("p must lie in [0, 1]")
            if not self.mean_degree > 0:
                raise ValueError("mean_degree must be positive")
        else:
            if self.k < 1:
                raise ValueError("k must be >= 1")
            if not self.epsilon > 0:
                raise ValueError("epsilon must be positive")

    def build(self) -> Instance:
        if self.family == "random":
            return random_instance(self.n, self.mean_degree, self.p, self.seed, budget=self.budget)
        fn = {"ig_bad": ig_bad_case, "dg_bad": dg_bad_case, "both_bad": both_bad_case}[self.family]
        return fn(self.k, self.epsilon, budget=self.budget)


class _Spider:
    def __init__(self):
        self.vertices = [{"id": "c", "weight": 1.0}]
        self.edges = []

    def vertex(self, vid, weight):
        self.vertices.append({"id": vid, "weight": float(weight)})
        return vid

    def edge(self, a, b):
        self.edges.append({
            "id": f"{a}-{b}", "from": a, "to": b, "probability": 0.0,
            "improvement": {"probability": 1.0, "cost": 1.0},
        })

    def path(self, name, weights):
        prev = "c"
        for i, w in enumerate(weights):
            cur = self.vertex(f"{name}{i + 1}", w)
            self.edge(prev, cur)
            prev = cur

    def instance(self, budget) -> Instance:
        return from_dict({"vertices": self.vertices, "edges": self.edges, "budget": budget})


def ig_bad_case(k: int, eps: float = 0.01, budget: float = 0.0) -> Instance:
    """k two-edge branches (0 then 1) and k one-edge branches ending in eps."""
    s = _Spider()
    for i in range(k):
        s.path(f"L{i}_", [0.0, 1.0])
    for i in range(k):
        s.path(f"S{i}_", [eps])
    return s.instance(budget)


def dg_bad_case(k: int, eps: float = 0.01, budget: float = 0.0) -> Instance:
    """Star of k unit leaves plus one k-edge path whose leaf weighs 1 + eps."""
    s = _Spider()
    for i in range(k):
        s.path(f"S{i}_", [1.0])
    s.path("P", [0.0] * (k - 1) + [1.0 + eps])
    return s.instance(budget)


def both_bad_case(k: int, eps: float = 0.01, budget: float = 0.0) -> Instance:
    """k two-edge branches (0 then 1) plus a 2k-edge path of eps vertices ending in 1 + eps."""
    s = _Spider()
    for i in range(k):
        s.path(f"B{i}_", [0.0, 1.0])
    s.path("P", [eps] * (2 * k - 1) + [1.0 + eps])
    return s.instance(budget)


def random_instance(n: int, mean_degree: float, p: float, seed: int, budget: float = 0.0) -> Instance:
    """Random geometric landscape on the unit square.

    Points within radius ``sqrt(deg / ((n - 1) pi))`` are joined by a pair of
    opposite arcs; only the largest connected component is kept.  Arc
    probability decays as ``exp(-alpha * distance)`` with ``alpha`` chosen so
    the median arc has probability 1/2.  A seeded choice of
    ``round(p * |A|)`` arcs may be raised to ``sqrt(pi)`` at unit cost.
    """
    if n < 2:
        raise ValueError("random instances need n >= 2")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    weights = rng.random(n)
    radius = math.sqrt(mean_degree / ((n - 1) * math.pi))
    pairs = np.array(sorted(cKDTree(pts).query_pairs(radius)), dtype=int).reshape(-1, 2)
    if len(pairs) == 0:
        raise InstanceError("degenerate geometry: no two points are within the connection radius")

    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, label = connected_components(adj, directed=False)
    biggest = np.argmax(np.bincount(label))
    keep = np.flatnonzero(label == biggest)
    pairs = pairs[(label[pairs[:, 0]] == biggest)]
    renum = {int(v): i for i, v in enumerate(keep)}

    dist = np.linalg.norm(pts[pairs[:, 0]] - pts[pairs[:, 1]], axis=1)
    if np.any(dist <= 0):
        raise InstanceError("degenerate geometry: coincident points")
    alpha = math.log(2.0) / float(np.median(dist))
    prob = np.exp(-alpha * dist)

    ends = [(renum[int(a)], renum[int(b)]) for a, b in pairs]
    arcs = []
    for (a, b), q in zip(ends, prob):
        arcs.append((a, b, float(q)))
        arcs.append((b, a, float(q)))
    chosen = set(rng.choice(len(arcs), size=int(round(p * len(arcs))), replace=False).tolist())

    doc = {
        "vertices": [{"id": f"v{i}", "weight": float(weights[v])} for i, v in enumerate(keep)],
        "arcs": [],
        "budget": budget,
    }
    for i, (a, b, q) in enumerate(arcs):
        d = {"id": f"a{i}", "from": f"v{a}", "to": f"v{b}", "probability": q}
        if i in chosen:
            d["improvement"] = {"probability": math.sqrt(q), "cost": 1.0}
        doc["arcs"].append(d)
    return from_dict(doc)
