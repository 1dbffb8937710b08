import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from goldenball import kernels
from goldenball.core import InfeasibleOffspring, InvalidMove, MalformedGenotype, split_routes
from goldenball.operators import (PERMUTATION_MOVES, ROUTED_MOVES, THREE_OPT_VARIANTS, MoveKind,
                                  apply_move, hx_crossover, ox_crossover, parse_move,
                                  srx_crossover, swap, three_opt, two_opt, vertex_insertion)
from goldenball.problems import TspInstance, tsp_objective

perms = st.integers(2, 12).flatmap(lambda n: st.permutations(list(range(1, n + 1))))


def routed_genotypes(max_n=12):
    """Customers 1..n split into routes (possibly empty) by separators."""
    def build(args):
        perm, cuts = args
        g = list(perm)
        for c in sorted(cuts, reverse=True):
            g.insert(c, 0)
        return np.array(g)
    return st.integers(2, max_n).flatmap(
        lambda n: st.tuples(st.permutations(list(range(1, n + 1))),
                            st.lists(st.integers(0, n), max_size=4))).map(build)


# --- worked examples -------------------------------------------------------

def test_ox_worked_example():
    h1, h2 = ox_crossover([1, 2, 3, 4, 5, 6, 7, 8], [2, 4, 6, 8, 7, 5, 3, 1], 2, 5)
    assert h1.tolist() == [8, 7, 3, 4, 5, 1, 2, 6]
    assert h2.tolist() == [4, 5, 6, 8, 7, 1, 2, 3]


def test_ox_small_hand_fill():
    h1, h2 = ox_crossover([1, 2, 3], [3, 2, 1], 1, 2)
    assert h1.tolist() == [3, 2, 1]
    assert h2.tolist() == [1, 2, 3]


def test_hx_worked_examples():
    h1, h2 = hx_crossover([1, 2, 3, 4, 5, 6, 7, 8], [2, 4, 6, 8, 7, 5, 3, 1])
    assert h1.tolist() == [1, 2, 3, 4, 6, 8, 7, 5]
    assert h2.tolist() == [2, 4, 6, 8, 1, 3, 5, 7]
    assert hx_crossover([1, 2, 3, 4, 5], [5, 4, 3, 2, 1])[0].tolist() == [1, 2, 5, 4, 3]


SRX_P = [1, 2, 3, 4, 0, 9, 10, 11, 12, 0, 13, 14, 15, 16, 0, 5, 6, 7, 8]
SRX_M = [1, 12, 6, 3, 0, 2, 4, 7, 11, 0, 5, 14, 16, 9, 0, 8, 13, 10, 15]


def test_srx_worked_example():
    h1, h2 = srx_crossover(SRX_P, SRX_M, demands=[0] + [1] * 16, capacity=4)
    assert h1.tolist() == [1, 2, 3, 4, 0, 9, 10, 11, 12, 0, 6, 7, 5, 14, 0, 16, 8, 13, 15]
    assert h2.tolist() == [1, 12, 6, 3, 0, 2, 4, 7, 11, 0, 9, 10, 13, 14, 0, 15, 16, 5, 8]


def test_srx_identical_parents_ample_capacity():
    p = [3, 1, 0, 2, 4]
    h1, h2 = srx_crossover(p, p, demands=[0, 1, 1, 1, 1], capacity=2)
    assert h1.tolist() == p and h2.tolist() == p


def test_srx_keeps_shortest_route_verbatim():
    cost = {1: 1.0, 2: 1.0, 3: 5.0, 4: 5.0}
    key = lambda r: sum(cost[c] for c in r)  # noqa: E731
    p, m = [3, 4, 0, 2, 1], [1, 3, 0, 4, 2]
    h1, _ = srx_crossover(p, m, route_key=key)
    assert split_routes(h1)[0].tolist() == [2, 1]
    h1l, _ = srx_crossover(p, m, mode="long", route_key=key)
    assert split_routes(h1l)[0].tolist() == [3, 4]


def test_srx_infeasible_and_malformed():
    with pytest.raises(InfeasibleOffspring):
        srx_crossover([1, 0, 2], [2, 0, 1], demands=[0, 5, 20], capacity=10)
    with pytest.raises(MalformedGenotype):
        srx_crossover([1, 0, 2], [1, 0, 3])


def test_two_opt_examples():
    assert two_opt([1, 2, 3, 4, 5, 6], 2, 4).tolist() == [1, 2, 5, 4, 3, 6]
    assert two_opt([1, 2, 3], 1, 1).tolist() == [1, 2, 3]
    assert two_opt([1, 2, 0, 3, 4, 5], 3, 5, routed=True).tolist() == [1, 2, 0, 5, 4, 3]
    with pytest.raises(InvalidMove):
        two_opt([1, 2, 0, 3, 4], 1, 3, routed=True)


def test_three_opt_examples():
    assert three_opt([1, 2, 3, 4, 5, 6], (1, 3, 5), "segment-swap").tolist() == [1, 2, 5, 6, 3, 4]
    with pytest.raises(InvalidMove):
        three_opt([1, 2, 3, 4, 5, 6], (1, 3, 5), 7)  # identity reconnection is not a variant
    with pytest.raises(InvalidMove):
        three_opt([1, 2, 3, 4, 5, 6], (3, 1, 5), 0)
    with pytest.raises(InvalidMove):
        three_opt([1, 2, 0, 3, 4, 5], (0, 2, 4), 0, routed=True)


def test_three_opt_variants_are_distinct_non_identity():
    g = list(range(1, 9))
    outs = {tuple(three_opt(g, (1, 3, 6), v).tolist()) for v in range(7)}
    assert len(outs) == 7 and tuple(g) not in outs


def test_three_opt_best_neighbor_not_worse_on_ring():
    xy = np.array([[np.cos(t), np.sin(t)] for t in np.linspace(0, 2 * np.pi, 7)[:-1]])
    inst = TspInstance(np.round(np.hypot(*(xy[:, None] - xy[None]).transpose(2, 0, 1)), 6))
    tour = list(range(6))
    f0 = tsp_objective(inst, tour)
    best = min(tsp_objective(inst, three_opt(tour, c, v))
               for c in itertools.combinations(range(5), 3) for v in range(7))
    assert best <= f0 + 1e-9


def test_vertex_insertion_and_swap_examples():
    assert vertex_insertion([1, 2, 3, 4], 0, 2).tolist() == [2, 3, 1, 4]
    assert vertex_insertion([1, 2, 3, 4], 2, 2).tolist() == [1, 2, 3, 4]
    assert vertex_insertion([1, 2, 0, 3, 4], 1, 4, routed=True).tolist() == [1, 0, 3, 4, 2]
    assert swap([1, 2, 3, 4], 0, 3).tolist() == [4, 2, 3, 1]
    assert swap([1, 2, 3, 4], 1, 1).tolist() == [1, 2, 3, 4]
    assert swap([1, 2, 0, 3, 4], 1, 3, routed=True).tolist() == [1, 3, 0, 2, 4]
    with pytest.raises(InvalidMove):
        swap([1, 2, 0, 3], 2, 0, routed=True)
    with pytest.raises(InvalidMove):
        vertex_insertion([1, 0, 2], 1, 0, routed=True)


def test_parse_move_and_pools():
    assert parse_move("2-opt") is MoveKind.TWO_OPT
    assert parse_move("Swapping") is MoveKind.SWAP_INTRA
    assert parse_move(3) is MoveKind.VERTEX_INSERTION_INTER
    with pytest.raises(ValueError):
        parse_move("or-opt")
    assert not any(m.inter for m in PERMUTATION_MOVES)
    assert len(ROUTED_MOVES) == 4 and len(THREE_OPT_VARIANTS) == 7


def test_crossover_argument_errors():
    with pytest.raises(MalformedGenotype):
        ox_crossover([1, 2, 3], [1, 2], 0, 1)
    with pytest.raises(MalformedGenotype):
        hx_crossover([1, 0, 2, 0], [0, 1, 0, 2])
    with pytest.raises(MalformedGenotype):
        hx_crossover([1, 2, 3], [1, 2, 4])


def test_two_opt_neighborhood_matches_brute_force():
    for n in range(2, 9):
        g = list(range(n))
        mine = {tuple(two_opt(g, i, j).tolist()) for i in range(n) for j in range(i + 1, n)}
        brute = {tuple(g[:i] + g[i:j + 1][::-1] + g[j + 1:])
                 for i, j in itertools.combinations(range(n), 2)}
        assert mine == brute
        assert sum(1 for _ in itertools.combinations(range(n), 2)) == n * (n - 1) // 2


# --- properties -------------------------------------------------------------

@given(perms, st.data())
def test_ox_hx_produce_permutations(p1, data):
    p2 = data.draw(st.permutations(p1))
    n = len(p1)
    c1 = data.draw(st.integers(0, n - 1))
    c2 = data.draw(st.integers(c1 + 1, n))
    for h in (*ox_crossover(p1, p2, c1, c2), *hx_crossover(p1, p2)):
        assert sorted(h.tolist()) == sorted(p1)
    h1, _ = ox_crossover(p1, p2, c1, c2)
    assert h1[c1:c2].tolist() == list(p1[c1:c2])


@given(perms, st.data())
def test_ox_hx_identity_on_equal_parents(p, data):
    n = len(p)
    c1 = data.draw(st.integers(0, n - 1))
    c2 = data.draw(st.integers(c1 + 1, n))
    assert all(h.tolist() == list(p) for h in ox_crossover(p, p, c1, c2))
    assert all(h.tolist() == list(p) for h in hx_crossover(p, p))


@given(routed_genotypes(), st.sampled_from(list(MoveKind)), st.integers(0, 2 ** 32))
def test_routed_moves_conserve_labels_and_intra_closure(g, move, seed):
    out = apply_move(move, g, np.random.default_rng(seed), routed=True)
    if out is None:
        return
    assert sorted(out.tolist()) == sorted(g.tolist())
    if not move.inter:
        before = [sorted(r.tolist()) for r in split_routes(g, keep_empty=True)]
        after = [sorted(r.tolist()) for r in split_routes(out, keep_empty=True)]
        assert before == after


@given(perms, st.sampled_from(PERMUTATION_MOVES), st.integers(0, 2 ** 32))
def test_permutation_moves_conserve_labels(p, move, seed):
    out = apply_move(move, np.array(p), np.random.default_rng(seed))
    if move == MoveKind.THREE_OPT and len(p) < 3:
        assert out is None  # no three distinct cut points
        return
    assert out is not None
    assert sorted(out.tolist()) == sorted(p)


def _capacity_split(order, demands, cap):
    routes, load = [[]], 0
    for c in order:
        if load + demands[c] > cap:
            routes.append([])
            load = 0
        routes[-1].append(int(c))
        load += demands[c]
    return np.array(sum(([0] + r for r in routes), [])[1:])


@given(st.integers(2, 14), st.integers(0, 2 ** 32))
def test_srx_children_cover_customers_and_respect_capacity(n, seed):
    rng = np.random.default_rng(seed)
    demands = np.concatenate(([0], rng.integers(1, 5, n)))
    cap = 8
    g = _capacity_split(rng.permutation(np.arange(1, n + 1)), demands, cap)
    other = _capacity_split(rng.permutation(np.arange(1, n + 1)), demands, cap)
    for mode in ("short", "long"):
        h1, h2 = srx_crossover(g, other, mode, demands=demands, capacity=cap)
        for h in (h1, h2):
            assert sorted(h[h != 0].tolist()) == list(range(1, n + 1))
            assert all(demands[r].sum() <= cap for r in split_routes(h))


def test_kernel_ox_matches_wrapper():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p1, p2 = rng.permutation(9) + 1, rng.permutation(9) + 1
        a, b = sorted(rng.choice(10, 2, replace=False))
        assert all(np.array_equal(x, y) for x, y in
                   zip(kernels.ox(p1, p2, a, b), ox_crossover(p1, p2, a, b)))
