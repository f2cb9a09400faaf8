import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from builders import instances
from ecaopt import connectivity as C
from ecaopt.instance import Arc, Instance, Vertex, apply_scenario
from oracles import eca_squared_by_paths, max_product_by_paths


def pair(p, w=(1.0, 1.0)):
    return Instance([Vertex("a", w[0]), Vertex("b", w[1])], [Arc("ab", "a", "b", p)])


def test_two_vertices_one_arc():
    # 1*1 + 1*1 + 1*1*0.5 (only a -> b exists)
    v = C.eca(pair(0.5))
    assert v.squared == pytest.approx(2.5, rel=1e-12)


def test_two_vertices_both_directions_gives_sqrt3():
    inst = Instance([Vertex("a", 1.0), Vertex("b", 1.0)],
                    [Arc("ab", "a", "b", 0.5), Arc("ba", "b", "a", 0.5)])
    assert C.eca(inst).eca == pytest.approx(math.sqrt(3), rel=1e-12)


def test_pc_is_eca_squared_over_area_squared():
    assert C.pc(C.EcaValue(4.0), 4.0) == 0.25
    assert C.pc(2.0, 4.0) == 0.25
    with pytest.raises(ValueError):
        C.pc(2.0, 0.0)


def test_max_product_not_sum_of_paths():
    # two parallel 2-hop routes; the better one wins, they do not add up
    vs = [Vertex(x, 1.0) for x in "sabt"]
    arcs = [Arc("sa", "s", "a", 0.5), Arc("at", "a", "t", 0.5),
            Arc("sb", "s", "b", 0.9), Arc("bt", "b", "t", 0.1)]
    pi = C.reliabilities_to_target(Instance(vs, arcs), 3)
    assert pi[0] == pytest.approx(0.25)


def test_long_chains_do_not_underflow_to_nan():
    n = 400
    vs = [Vertex(f"v{i}", 1.0) for i in range(n)]
    arcs = [Arc(f"a{i}", f"v{i}", f"v{i+1}", 1e-3) for i in range(n - 1)]
    v = C.eca(Instance(vs, arcs))
    assert math.isfinite(v.squared) and v.squared >= n


def test_zero_probability_arcs_disconnect():
    assert C.eca(pair(0.0, (2.0, 3.0))).squared == 13.0


@given(instances(max_n=6, max_m=9))
def test_eca_matches_path_enumeration(inst):
    g = apply_scenario(inst)
    arcs = list(zip(inst.arc_source.tolist(), inst.arc_target.tolist()))
    expect = eca_squared_by_paths(inst.n, arcs, np.exp(-g.length).tolist(), g.weight.tolist())
    assert C.eca(inst).squared == pytest.approx(expect, rel=1e-9, abs=1e-12)


@given(instances(max_n=6, max_m=9), st.integers(0, 5))
def test_f_t_matches_path_enumeration(inst, t):
    t %= inst.n
    g = apply_scenario(inst)
    arcs = list(zip(inst.arc_source.tolist(), inst.arc_target.tolist()))
    probs = np.exp(-g.length).tolist()
    expect = math.fsum(g.weight[s] * max_product_by_paths(inst.n, arcs, probs, s, t) for s in range(inst.n))
    assert C.f_t(inst, t) == pytest.approx(expect, rel=1e-9, abs=1e-12)


@given(instances(max_n=6, max_m=10))
def test_all_pairs_matrix_agrees_with_per_target_dijkstra(inst):
    d = C.all_pairs_distances(inst)
    g = apply_scenario(inst)
    for t in range(inst.n):
        np.testing.assert_allclose(d[:, t], C.distances_to_target(g, t), rtol=1e-12)
    assert C.eca_squared_from_distances(d, g.weight) == pytest.approx(C.eca(inst).squared, rel=1e-12)


@given(instances(max_n=6, max_m=10, max_improvable=6, edges=False), st.data())
def test_decrease_update_equals_recompute(inst, data):
    arcs = [k for k in range(len(inst.options)) if inst.options[k].kind == "arc"]
    if not arcs:
        return
    k = data.draw(st.sampled_from(arcs))
    a = inst.options[k].arcs[0]
    before = C.all_pairs_distances(inst)
    after = C.apsp_decrease_update(before, int(inst.arc_source[a]), int(inst.arc_target[a]),
                                   inst.arc_improved_length[a], inst.arc_length[a])
    expect = C.all_pairs_distances(apply_scenario(inst, [inst.options[k].id]))
    np.testing.assert_allclose(after, expect, rtol=1e-12, atol=1e-12)


def test_decrease_update_rejects_increase_and_keeps_input():
    d = np.array([[0.0, 1.0], [np.inf, 0.0]])
    with pytest.raises(ValueError, match="decreases"):
        C.apsp_decrease_update(d, 0, 1, 2.0, 1.0)
    out = C.apsp_decrease_update(d, 1, 0, 0.5)
    assert out[1, 0] == 0.5 and d[1, 0] == np.inf


@given(instances(max_n=6, max_m=10))
def test_threads_do_not_change_values(inst):
    assert C.f_all(inst, threads=4).tolist() == C.f_all(inst).tolist()
