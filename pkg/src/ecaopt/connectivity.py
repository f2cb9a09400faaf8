"""Most-reliable-path probabilities and the ECA / PC indicators.

Probabilities are handled as lengths ``-log(pi)`` so long paths do not
underflow; ``exp(-d)`` is taken only when a probability is reported.
"""

from __future__ import annotations

import heapq
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .instance import EffectiveGraph, Instance, apply_scenario


@dataclass(frozen=True)
class EcaValue:
    squared: float

    @property
    def eca(self) -> float:
        return math.sqrt(self.squared)


def as_graph(obj, x=None) -> EffectiveGraph:
    if isinstance(obj, Instance):
        return apply_scenario(obj, x)
    return obj


def reverse_adjacency(g: EffectiveGraph) -> list[list[tuple[int, float]]]:
    radj: list[list[tuple[int, float]]] = [[] for _ in range(g.n)]
    for s, t, l in zip(g.source.tolist(), g.target.tolist(), g.length.tolist()):
        if l != math.inf and s != t:
            radj[t].append((s, l))
    return radj


def forward_adjacency(g: EffectiveGraph) -> list[list[tuple[int, float]]]:
    adj: list[list[tuple[int, float]]] = [[] for _ in range(g.n)]
    for s, t, l in zip(g.source.tolist(), g.target.tolist(), g.length.tolist()):
        if l != math.inf and s != t:
            adj[s].append((t, l))
    return adj


def dijkstra(adj, root: int, n: int) -> np.ndarray:
    """Plain Dijkstra over adjacency lists ``adj[u] = [(w, length), ...]``."""
    dist = [math.inf] * n
    dist[root] = 0.0
    done = [False] * n
    heap = [(0.0, root)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for w, l in adj[u]:
            nd = d + l
            if nd < dist[w]:
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    return np.array(dist)


def distances_to_target(g: EffectiveGraph, t: int, radj=None) -> np.ndarray:
    """``d(s, t)`` for every ``s``, by Dijkstra on the reversed arcs."""
    if radj is None:
        radj = reverse_adjacency(g)
    return dijkstra(radj, t, g.n)


def reliabilities_to_target(g, t: int, x=None) -> np.ndarray:
    """``Pi_st`` for every source ``s`` (0 where ``t`` is unreachable)."""
    g = as_graph(g, x)
    return np.exp(-distances_to_target(g, t))


def f_t(g, t: int, x=None, radj=None) -> float:
    """Weighted connection mass reaching ``t``: ``sum_s w_s Pi_st``."""
    g = as_graph(g, x)
    pi = np.exp(-distances_to_target(g, t, radj))
    return math.fsum((g.weight * pi).tolist())


def parallel_map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def f_all(g, x=None, threads: int = 1) -> np.ndarray:
    g = as_graph(g, x)
    radj = reverse_adjacency(g)
    return np.array(parallel_map(lambda t: f_t(g, t, radj=radj), range(g.n), threads))


def eca(g, x=None, threads: int = 1) -> EcaValue:
    """ECA of an instance (under scenario ``x``) or of an effective graph.

    Implements the literal double sum, both orders of every pair included,
    with one reverse Dijkstra per target.
    """
    g = as_graph(g, x)
    ft = f_all(g, threads=threads)
    return EcaValue(math.fsum((g.weight * ft).tolist()))


def pc(value: EcaValue | float, area: float) -> float:
    """Probability of connectivity for a landscape of bounding area ``area``."""
    if not area > 0:
        raise ValueError(f"landscape area must be positive, got {area!r}")
    squared = value.squared if isinstance(value, EcaValue) else float(value) ** 2
    return squared / (area * area)


# -- all-pairs distance matrices ---------------------------------------------------


def all_pairs_distances(g) -> np.ndarray:
    """Dense ``d[s, t]`` matrix by one forward Dijkstra per source."""
    g = as_graph(g)
    adj = forward_adjacency(g)
    if g.n == 0:
        return np.zeros((0, 0))
    return np.vstack([dijkstra(adj, s, g.n) for s in range(g.n)])


def apsp_decrease_update(dist: np.ndarray, u: int, v: int, new_length: float,
                         old_length: float | None = None) -> np.ndarray:
    """Distance matrix after shortening arc ``(u, v)`` to ``new_length``.

    Only decreases are supported: a shorter arc is used at most once by any
    new shortest path, so ``d'(s,t) = min(d(s,t), d(s,u) + l + d(v,t))``.
    Returns a new matrix; ``dist`` is left untouched.
    """
    if old_length is not None and new_length > old_length:
        raise ValueError("apsp_decrease_update only handles length decreases; recompute instead")
    if new_length == math.inf:
        return dist.copy()
    via = dist[:, u][:, None] + new_length + dist[v, :][None, :]
    return np.minimum(dist, via)


def eca_squared_from_distances(dist: np.ndarray, weight: np.ndarray) -> float:
    with np.errstate(over="ignore"):
        prob = np.exp(-dist)
    terms = (weight[:, None] * prob * weight[None, :]).ravel()
    return math.fsum(terms.tolist())
