"""Strong / useless arc classification and per-target graph reduction.

For a pivot arc ``(u, v)`` a two-colour Dijkstra sweep from ``u`` decides,
for every vertex ``t`` at once, whether the arc lies on a shortest
``u``-``t`` path in every scenario (strong), on all of them in every
scenario (strictly strong), or on none in any scenario (useless).  Blue
vertices are those reached through the distinguished arc set; arcs leaving
blue vertices are taken at their upper length, arcs leaving red vertices at
their lower length, which realises the worst scenario for the question asked.

Paths are simple: ``u`` itself is never in a strong set and always in a
useless set.
"""

from __future__ import annotations

import heapq
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .instance import Instance, apply_scenario

REL_TOL = 1e-12

BLUE, RED = 0, 1


@dataclass(frozen=True)
class IntervalLengthGraph:
    n: int
    source: np.ndarray
    target: np.ndarray
    upper: np.ndarray
    lower: np.ndarray

    def __post_init__(self):
        if np.any(self.lower < 0) or np.any(self.lower > self.upper):
            raise ValueError("arc lengths must satisfy 0 <= lower <= upper")

    @classmethod
    def from_instance(cls, instance: Instance) -> "IntervalLengthGraph":
        return cls(instance.n, instance.arc_source, instance.arc_target,
                   instance.arc_length, instance.arc_improved_length)

    @property
    def m(self) -> int:
        return len(self.source)

    def out_arcs(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n)]
        for i, s in enumerate(self.source.tolist()):
            out[s].append(i)
        return out


def _close(a: float, b: float) -> bool:
    if a == b:
        return True
    if a == math.inf or b == math.inf:
        return False
    return abs(a - b) <= REL_TOL * max(abs(a), abs(b), 1.0)


class _Sweep:
    """Shared state for the colour-propagating Dijkstra variants."""

    def __init__(self, g: IntervalLengthGraph, out=None):
        self.g = g
        self.out = out if out is not None else g.out_arcs()
        self.tgt = g.target.tolist()
        self.up = g.upper.tolist()
        self.lo = g.lower.tolist()

    def run(self, pivot: int, mode: str) -> tuple[list[float], list[int | None]]:
        """Return final distances and colours (None = never reached)."""
        g = self.g
        if not 0 <= pivot < g.m:
            raise IndexError(f"pivot arc {pivot} not in graph")
        u = int(g.source[pivot])
        prefer = BLUE if mode == "strong" else RED
        d = [math.inf] * g.n
        color: list[int | None] = [None] * g.n
        settled = [False] * g.n
        settled[u] = True
        d[u] = 0.0
        color[u] = RED if mode != "useless" else BLUE
        heap: list[tuple[float, int, int]] = []

        def offer(w: int, cand: float, c: int):
            if cand == math.inf or settled[w]:
                return
            cur = d[w]
            if _close(cand, cur):
                if c == prefer and color[w] != c:
                    color[w] = c
                    d[w] = min(cur, cand)
                    heapq.heappush(heap, (d[w], c != prefer, w))
            elif cand < cur:
                d[w] = cand
                color[w] = c
                heapq.heappush(heap, (cand, c != prefer, w))

        pivot_color = BLUE if mode != "useless" else RED
        pivot_len = self.up[pivot] if mode != "useless" else self.lo[pivot]
        for a in self.out[u]:
            w = self.tgt[a]
            if w == u:
                continue
            if a == pivot:
                offer(w, pivot_len, pivot_color)
            elif mode == "useless":
                offer(w, self.up[a], BLUE)
            else:
                offer(w, self.lo[a], RED)

        while heap:
            t = self._pop(heap, d, color, settled, prefer)
            if t is None:
                break
            settled[t] = True
            c = color[t]
            lengths = self.up if c == BLUE else self.lo
            dt = d[t]
            for a in self.out[t]:
                w = self.tgt[a]
                if w != t:
                    offer(w, dt + lengths[a], c)
        return d, color

    @staticmethod
    def _pop(heap, d, color, settled, prefer):
        # collect every live entry tied (within tolerance) with the minimum,
        # then take the preferred colour among them
        first = None
        while heap:
            dist, rank, w = heapq.heappop(heap)
            if settled[w] or dist != d[w] or rank != (color[w] != prefer):
                continue
            first = (dist, rank, w)
            break
        if first is None:
            return None
        tied = [first]
        while heap and _close(heap[0][0], first[0]):
            dist, rank, w = heapq.heappop(heap)
            if settled[w] or dist != d[w] or rank != (color[w] != prefer):
                continue
            tied.append((dist, rank, w))
        tied.sort(key=lambda e: (e[1], e[0], e[2]))
        for e in tied[1:]:
            heapq.heappush(heap, e)
        return tied[0][2]


def _collect(g, d, color, u, mode) -> frozenset[int]:
    if mode == "useless":
        return frozenset(w for w in range(g.n) if color[w] == BLUE or d[w] == math.inf)
    return frozenset(w for w in range(g.n) if w != u and color[w] == BLUE and d[w] != math.inf)


def _targets(g: IntervalLengthGraph, pivot: int, mode: str, sweep=None) -> frozenset[int]:
    sweep = sweep or _Sweep(g)
    d, color = sweep.run(pivot, mode)
    return _collect(g, d, color, int(g.source[pivot]), mode)


def strong_targets(g: IntervalLengthGraph, pivot: int, sweep=None) -> frozenset[int]:
    """Vertices ``t`` for which arc ``pivot`` is t-strong."""
    return _targets(g, pivot, "strong", sweep)


def strict_strong_targets(g: IntervalLengthGraph, pivot: int, sweep=None) -> frozenset[int]:
    """Vertices ``t`` for which arc ``pivot`` lies on every shortest path in every scenario."""
    return _targets(g, pivot, "strict", sweep)


def useless_targets(g: IntervalLengthGraph, pivot: int, sweep=None) -> frozenset[int]:
    """Vertices ``t`` for which arc ``pivot`` lies on no shortest path in any scenario."""
    return _targets(g, pivot, "useless", sweep)


@dataclass(frozen=True)
class TargetSets:
    strong: tuple[frozenset[int], ...]   # S(t): arc indices, per target
    useless: tuple[frozenset[int], ...]  # W(t)


def compute_all_sets(g: IntervalLengthGraph, threads: int = 1) -> TargetSets:
    """Run both sweeps for every arc and transpose into per-target arc sets."""
    sweep = _Sweep(g)

    def per_arc(a):
        return strong_targets(g, a, sweep), useless_targets(g, a, sweep)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(per_arc, range(g.m)))
    else:
        results = [per_arc(a) for a in range(g.m)]
    strong: list[set[int]] = [set() for _ in range(g.n)]
    useless: list[set[int]] = [set() for _ in range(g.n)]
    for a, (s_set, w_set) in enumerate(results):
        for t in s_set:
            strong[t].add(a)
        for t in w_set:
            useless[t].add(a)
    return TargetSets(tuple(map(frozenset, strong)), tuple(map(frozenset, useless)))


# -- reduction -------------------------------------------------------------------


@dataclass(frozen=True)
class ReducedArc:
    """Arc of a reduced graph; keeps the index of the original arc it came from."""

    arc: int
    source: int
    target: int
    upper: float   # shifted -log(pi)
    lower: float   # shifted -log(pi'), equal to upper for fixed arcs
    option: int    # option index, -1 if fixed


@dataclass(frozen=True)
class TargetReduction:
    target: int
    strong_arcs: frozenset[int]
    useless_arcs: frozenset[int]
    vertices: tuple[int, ...]                 # surviving original vertex indices
    arcs: tuple[ReducedArc, ...]
    vertex_map: dict[int, int]                # original vertex -> surviving representative
    offset: dict[int, float]                  # accumulated length to the representative
    weight_terms: dict[int, tuple[tuple[int, float], ...]] = field(default_factory=dict)
    # weight_terms[r] = ((original vertex, factor exp(-offset)), ...) merged into r

    def weights(self, vertex_weight: np.ndarray) -> dict[int, float]:
        return {r: math.fsum(vertex_weight[u] * f for u, f in terms)
                for r, terms in self.weight_terms.items()}


def reduce_for_target(instance: Instance, t: int, strong: frozenset[int],
                      useless: frozenset[int]) -> TargetReduction:
    """Delete the arcs of W(t) and contract the fixed arcs of S(t).

    Contracting ``(u, v)`` moves ``u`` into ``v``: arcs ``(w, u)`` become
    ``(w, v)`` with both length bounds increased by ``l_uv`` and ``u``'s
    weight reaches ``v`` scaled by ``exp(-l_uv)``.  Chains are resolved by a
    representative map with accumulated offsets.
    """
    n = instance.n
    src = instance.arc_source.tolist()
    dst = instance.arc_target.tolist()
    upper = instance.arc_length.tolist()
    lower = instance.arc_improved_length.tolist()
    opt = instance.arc_option.tolist()

    # one contraction arc per vertex: the first fixed strong arc leaving it
    nxt: dict[int, int] = {}
    for a in sorted(strong):
        u = src[a]
        if opt[a] >= 0 or a in useless or u == t or u in nxt or dst[a] == u:
            continue
        nxt[u] = a

    # resolve chains; a zero-length cycle is broken at its first revisit
    rep: dict[int, int] = {}
    off: dict[int, float] = {}
    for start in range(n):
        if start in rep:
            continue
        path = []
        onpath = set()
        cur = start
        while cur not in rep and cur in nxt and cur not in onpath:
            path.append(cur)
            onpath.add(cur)
            cur = dst[nxt[cur]]
        if cur in onpath:
            # cur closes a cycle: keep it as a survivor
            del nxt[cur]
            rep[cur], off[cur] = cur, 0.0
        elif cur not in rep:
            rep[cur], off[cur] = cur, 0.0
        for w in reversed(path):
            if w in rep:
                continue
            a = nxt[w]
            rep[w], off[w] = rep[dst[a]], off[dst[a]] + upper[a]

    survivors = tuple(v for v in range(n) if rep[v] == v)
    terms: dict[int, list[tuple[int, float]]] = {v: [] for v in survivors}
    for v in range(n):
        terms[rep[v]].append((v, math.exp(-off[v])))

    arcs = []
    for a in range(instance.m):
        s, d = src[a], dst[a]
        if a in useless or rep[s] != s:
            continue
        r = rep[d]
        if r == s:
            continue
        shift = off[d]
        arcs.append(ReducedArc(a, s, r, upper[a] + shift, lower[a] + shift, opt[a]))

    return TargetReduction(
        target=t,
        strong_arcs=frozenset(strong),
        useless_arcs=frozenset(useless),
        vertices=survivors,
        arcs=tuple(arcs),
        vertex_map=dict(rep),
        offset=dict(off),
        weight_terms={v: tuple(ts) for v, ts in terms.items()},
    )


def reduce_all(instance: Instance, sets: TargetSets | None = None,
               threads: int = 1) -> dict[int, TargetReduction]:
    if sets is None:
        sets = compute_all_sets(IntervalLengthGraph.from_instance(instance), threads=threads)
    return {t: reduce_for_target(instance, t, sets.strong[t], sets.useless[t])
            for t in range(instance.n)}


def reduced_f_t(red: TargetReduction, instance: Instance, x=None) -> float:
    """``f_t`` evaluated on the reduced graph under scenario ``x``."""
    sel = instance.scenario(x)
    weights = red.weights(apply_scenario(instance, sel).weight)
    radj: dict[int, list[tuple[int, float]]] = {v: [] for v in red.vertices}
    for ra in red.arcs:
        l = ra.lower if ra.option >= 0 and sel[ra.option] else ra.upper
        if l != math.inf:
            radj[ra.target].append((ra.source, l))
    dist = {v: math.inf for v in red.vertices}
    dist[red.target] = 0.0
    heap = [(0.0, red.target)]
    done = set()
    while heap:
        dv, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        for s, l in radj[v]:
            nd = dv + l
            if nd < dist[s]:
                dist[s] = nd
                heapq.heappush(heap, (nd, s))
    return math.fsum(weights[v] * math.exp(-dist[v]) for v in red.vertices)
