"""Brute-force reference computations used only by the tests.

Nothing here calls into the package's shortest-path or sweep code; each
oracle recomputes its answer from the definitions (path enumeration,
scenario enumeration, textbook Dijkstra / Bellman-Ford).
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def max_product_by_paths(n, arcs, probs, s, t):
    """max over simple s-t paths of the product of arc probabilities."""
    if s == t:
        return 1.0
    out = [[] for _ in range(n)]
    for (a, b), p in zip(arcs, probs):
        out[a].append((b, p))
    best = 0.0
    stack = [(s, 1.0, frozenset([s]))]
    while stack:
        v, prod, seen = stack.pop()
        for w, p in out[v]:
            if w in seen:
                continue
            q = prod * p
            if w == t:
                best = max(best, q)
            else:
                stack.append((w, q, seen | {w}))
    return best


def eca_squared_by_paths(n, arcs, probs, weights):
    total = []
    for s in range(n):
        for t in range(n):
            total.append(weights[s] * weights[t] * max_product_by_paths(n, arcs, probs, s, t))
    return math.fsum(total)


def bellman_ford_from(n, arcs, lengths, root, skip_vertex=None, skip_arc=None):
    """Distances from ``root`` (Bellman-Ford, lengths >= 0, inf = absent)."""
    d = [math.inf] * n
    d[root] = 0.0
    for _ in range(n):
        changed = False
        for i, ((a, b), l) in enumerate(zip(arcs, lengths)):
            if i == skip_arc or l == math.inf or a == skip_vertex or b == skip_vertex:
                continue
            if d[a] + l < d[b]:
                d[b] = d[a] + l
                changed = True
        if not changed:
            break
    return d


def _close(a, b, tol=1e-9):
    if a == b:
        return True
    if math.inf in (a, b):
        return False
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def scenario_lengths(upper, lower, improvable, bits):
    lengths = list(upper)
    for i, bit in zip(improvable, bits):
        if bit:
            lengths[i] = lower[i]
    return lengths


def fiber(n, arcs, lengths, pivot):
    """Targets t != u with the pivot on a shortest simple u-t path."""
    u, v = arcs[pivot]
    if lengths[pivot] == math.inf:
        return set()
    du = bellman_ford_from(n, arcs, lengths, u)
    dv = bellman_ford_from(n, arcs, lengths, v, skip_vertex=u)
    return {t for t in range(n)
            if t != u and du[t] != math.inf and _close(du[t], lengths[pivot] + dv[t])}


def strict_fiber(n, arcs, lengths, pivot):
    """Targets t != u with the pivot on every shortest u-t path."""
    u, _ = arcs[pivot]
    du = bellman_ford_from(n, arcs, lengths, u)
    without = bellman_ford_from(n, arcs, lengths, u, skip_arc=pivot)
    on_some = fiber(n, arcs, lengths, pivot)
    return {t for t in on_some if not _close(without[t], du[t]) and without[t] > du[t]}


def enumerate_classes(n, arcs, upper, lower, pivot):
    """(strong, strict, useless) target sets by enumerating every scenario."""
    improvable = [i for i in range(len(arcs)) if lower[i] < upper[i]]
    strong = set(range(n))
    strict = set(range(n))
    useless = set(range(n))
    for bits in itertools.product((0, 1), repeat=len(improvable)):
        lengths = scenario_lengths(upper, lower, improvable, bits)
        f = fiber(n, arcs, lengths, pivot)
        strong &= f
        useless -= f
        strict &= strict_fiber(n, arcs, lengths, pivot)
    u = arcs[pivot][0]
    strong.discard(u)
    strict.discard(u)
    return strong, strict, useless


def f_t_dense(n, arcs, lengths, weights, t):
    d = [bellman_ford_from(n, arcs, lengths, s)[t] for s in range(n)]
    return math.fsum(w * math.exp(-x) for w, x in zip(weights, d))


def random_interval_graph(rng, n, m, n_improvable, tie_prone=True):
    """Random digraph with integer-ish lengths so that ties occur."""
    arcs = []
    while len(arcs) < m:
        a, b = rng.integers(0, n, size=2)
        if a != b:
            arcs.append((int(a), int(b)))
    if tie_prone:
        upper = rng.integers(1, 5, size=m).astype(float)
    else:
        upper = rng.uniform(0.1, 3.0, size=m)
    lower = upper.copy()
    for i in rng.choice(m, size=min(n_improvable, m), replace=False):
        lower[i] = float(rng.integers(0, int(upper[i]) + 1)) if tie_prone else upper[i] * rng.uniform(0, 1)
        if lower[i] == upper[i]:
            lower[i] = upper[i] / 2
    return arcs, upper, lower


def exhaustive_eca_squared(instance, selections):
    """ECA^2 for each selection via path enumeration on the effective graph."""
    from ecaopt.instance import apply_scenario
    out = []
    arcs = list(zip(instance.arc_source.tolist(), instance.arc_target.tolist()))
    for sel in selections:
        g = apply_scenario(instance, sel)
        probs = np.exp(-g.length).tolist()
        out.append(eca_squared_by_paths(instance.n, arcs, probs, g.weight.tolist()))
    return out
