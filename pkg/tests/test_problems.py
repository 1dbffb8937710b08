import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from goldenball.core import MalformedGenotype, RngStream
from goldenball.problems import (BACKHAUL, LINEHAUL, BppInstance, CvrpInstance, NqpInstance,
                                 TspInstance, VrpbInstance, bpp_bins,
                                 cvrp_objective_and_feasibility, nqp_collisions, tsp_objective,
                                 vrpb_feasibility, vrpb_objective_and_feasibility)


def synthetic_matrix(n1, seed=0, symmetric=False):
    rng = np.random.default_rng(seed)
    m = rng.integers(1, 100, (n1, n1)).astype(float)
    if symmetric:
        m = np.triu(m, 1) + np.triu(m, 1).T
    np.fill_diagonal(m, 0)
    return m


def test_tsp_encoding_expansion():
    m = synthetic_matrix(10, 1)
    x = [0, 5, 2, 4, 3, 1, 6, 8, 9, 7]
    d = lambda i, j: m[i, j]  # noqa: E731
    expected = (d(0, 5) + d(5, 2) + d(2, 4) + d(4, 3) + d(3, 1) + d(1, 6) + d(6, 8) + d(8, 9)
                + d(9, 7) + d(7, 0))
    inst = TspInstance(m)
    assert tsp_objective(inst, x) == pytest.approx(expected)
    assert inst.fitness(x) == pytest.approx(expected)


def test_tsp_small_examples():
    tri = TspInstance(np.ones((3, 3)) - np.eye(3))
    assert tri.fitness([0, 1, 2]) == 3.0 and tri.fitness([2, 1, 0]) == 3.0
    m = np.array([[0, 1, 5], [5, 0, 1], [1, 5, 0]], float)
    a = TspInstance(m)
    assert a.kind == "atsp" and tri.kind == "tsp"
    assert a.fitness([0, 1, 2]) == 3.0 and a.fitness([0, 2, 1]) == 15.0


def test_cvrp_encoding_expansion():
    m = synthetic_matrix(10, 2)
    inst = CvrpInstance(m, [0] + [1] * 9, 4)
    x = [5, 1, 3, 0, 2, 4, 0, 7, 9, 8, 6]
    d = lambda i, j: m[i, j]  # noqa: E731
    expected = (d(0, 5) + d(5, 1) + d(1, 3) + d(3, 0) + d(0, 2) + d(2, 4) + d(4, 0) + d(0, 7)
                + d(7, 9) + d(9, 8) + d(8, 6) + d(6, 0))
    assert cvrp_objective_and_feasibility(inst, x) == (pytest.approx(expected), True)
    assert inst.objective_and_feasibility(x) == (pytest.approx(expected), True)


def test_cvrp_small_cases():
    m = synthetic_matrix(3, 3)
    inst = CvrpInstance(m, [0, 6, 6], 10)
    assert not inst.objective_and_feasibility([1, 2])[1]
    assert inst.objective_and_feasibility([1, 0, 2])[1]
    one = CvrpInstance(m[:2, :2], [0, 3], 10)
    assert one.fitness([1]) == m[0, 1] + m[1, 0]
    with pytest.raises(ValueError):
        CvrpInstance(m, [0, 6, 11], 10)


def vrpb_case():
    m = synthetic_matrix(5, 4)
    cls = [0, LINEHAUL, LINEHAUL, BACKHAUL, BACKHAUL]
    return VrpbInstance(m, [0, 4, 4, 0, 0], [0, 0, 0, 3, 3], cls, 10)


def test_vrpb_ordering_examples():
    inst = vrpb_case()
    assert vrpb_feasibility(inst, [1, 2, 3, 0, 4])
    assert not vrpb_feasibility(inst, [1, 3, 2, 0, 4])
    assert vrpb_feasibility(inst, [3, 0, 1, 2, 4])  # backhaul-only route allowed
    assert inst.objective_and_feasibility([1, 3, 2, 0, 4])[1] is False


def test_nqp_examples():
    assert nqp_collisions(None, [4, 3, 1, 6, 5, 8, 2, 7]) == 3
    for n in range(1, 9):
        ident = list(range(1, n + 1))
        assert nqp_collisions(None, ident) == n * (n - 1) // 2
        assert NqpInstance(n).fitness(ident) == n * (n - 1) // 2
    assert nqp_collisions(None, [2, 4, 1, 3]) == 0


def test_bpp_examples():
    b = BppInstance([20, 20, 20, 30, 30, 30, 50, 50, 50], 100)
    assert bpp_bins(b, [1, 4, 7, 2, 5, 8, 3, 6, 9]) == 3
    assert bpp_bins(b, [1, 2, 3, 7, 8, 9, 4, 5, 6]) == 4
    assert b.fitness([1, 2, 3, 7, 8, 9, 4, 5, 6]) == 4
    assert bpp_bins(BppInstance([7], 10), [1]) == 1
    with pytest.raises(ValueError):
        BppInstance([5, 12], 10)


def test_encoding_errors():
    with pytest.raises(MalformedGenotype):
        tsp_objective(TspInstance(synthetic_matrix(4)), [0, 1, 2, 2])
    with pytest.raises(MalformedGenotype):
        NqpInstance(4).check_genotype(np.array([0, 1, 2, 3]))


# --- reference vs kernel ------------------------------------------------------

@given(st.integers(3, 10), st.integers(0, 2 ** 31), st.booleans())
def test_tsp_kernel_matches_reference_and_symmetries(n, seed, sym):
    inst = TspInstance(synthetic_matrix(n, seed, sym))
    tour = np.random.default_rng(seed).permutation(n)
    f = tsp_objective(inst, tour)
    assert inst.fitness(tour) == pytest.approx(f)
    assert tsp_objective(inst, np.roll(tour, 3)) == pytest.approx(f)
    if sym:
        assert tsp_objective(inst, tour[::-1]) == pytest.approx(f)


@given(st.integers(1, 12), st.integers(0, 2 ** 31))
def test_nqp_bpp_kernels_match_reference(n, seed):
    rng = np.random.default_rng(seed)
    g = rng.permutation(n) + 1
    assert NqpInstance(n).fitness(g) == nqp_collisions(None, g)
    b = BppInstance(rng.integers(1, 11, n), 10)
    assert b.fitness(g) == bpp_bins(b, g)


@given(st.integers(2, 10), st.integers(0, 2 ** 31))
def test_routed_kernels_match_reference(n, seed):
    rng = np.random.default_rng(seed)
    m = synthetic_matrix(n + 1, seed)
    dem = np.concatenate(([0], rng.integers(1, 6, n)))
    cv = CvrpInstance(m, dem, 8)
    g = cv.random_solution(rng)
    # scramble: extra separators and a random permutation of the body
    body = rng.permutation(np.concatenate((g, [0] * int(rng.integers(0, 3)))))
    f, ok = cvrp_objective_and_feasibility(cv, body)
    kf, kok = cv.objective_and_feasibility(body)
    assert kf == pytest.approx(f) and kok == ok
    cls = np.concatenate(([0], rng.integers(1, 3, n)))
    vb = VrpbInstance(m, np.where(cls == 1, dem, 0), np.where(cls == 2, dem, 0), cls, 8)
    f, ok = vrpb_objective_and_feasibility(vb, body)
    kf, kok = vb.objective_and_feasibility(body)
    assert kf == pytest.approx(f) and kok == ok


@given(st.integers(2, 30), st.integers(0, 2 ** 31))
def test_random_solutions_are_feasible(n, seed):
    rng = np.random.default_rng(seed)
    m = synthetic_matrix(n + 1, seed)
    dem = np.concatenate(([0], rng.integers(1, 6, n)))
    cv = CvrpInstance(m, dem, 8)
    assert np.isfinite(cv.fitness(cv.prepare(cv.random_solution(rng))))
    cls = np.concatenate(([0], rng.integers(1, 3, n)))
    vb = VrpbInstance(m, np.where(cls == 1, dem, 0), np.where(cls == 2, dem, 0), cls, 8)
    assert np.isfinite(vb.fitness(vb.prepare(vb.random_solution(rng))))


def test_brute_force_bounds_random_solutions():
    inst = TspInstance(synthetic_matrix(7, 9))
    best = min(tsp_objective(inst, (0,) + p) for p in itertools.permutations(range(1, 7)))
    gen = RngStream(0).gen
    assert all(inst.fitness(inst.random_solution(gen)) >= best for _ in range(200))
