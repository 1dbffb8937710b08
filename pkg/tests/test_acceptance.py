"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is printed.

The lines appear both inline (``-s``) and in the "acceptance criteria"
section of the terminal summary.
"""
import itertools
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import ACCEPTANCE
from goldenball import kernels
from goldenball.baselines import ga1, ga_run
from goldenball.core import RngStream, Search, neighborhood_budget
from goldenball.engine import (GbConfig, League, Player, Team, run, training_session,
                               transfer_period)
from goldenball.instances import (format_tsplib, load_bundled, parse_instance, parse_tsplib,
                                  random_euclidean, serialize_instance)
from goldenball.operators import MoveKind, hx_crossover, ox_crossover, srx_crossover
from goldenball.problems import (BppInstance, CvrpInstance, NqpInstance, TspInstance, bpp_bins,
                                 cvrp_objective_and_feasibility, nqp_collisions, tsp_objective)
from goldenball.richvrp import BENCHMARK, bundled_coordinates, demand_pattern, generate_acvrp
from goldenball.stats import (RankTable, StatsSample, friedman, friedman_statistic, holm_posthoc,
                              z_statistic)


def report(name: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.append((name, bool(ok), detail))
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, detail


def _gb_runs(name, runs=10):
    p = load_bundled(name)
    return [run(p, GbConfig.for_problem(p), seed=s).best_f for s in range(runs)]


_CACHE: dict = {}


def gb_results(name):
    if name not in _CACHE:
        t = time.perf_counter()
        _CACHE[name] = (_gb_runs(name), time.perf_counter() - t)
    return _CACHE[name]


# --- statistics ---------------------------------------------------------------------------

def test_statistical_reproduction():
    stat = friedman_statistic((1.2, 2.0667, 2.7333), 15)
    table = RankTable.from_average_ranks((1.2, 2.0667, 2.7333), 15, ("GB", "ESA", "EA"))
    rows = {r.algorithm: r for r in holm_posthoc(table, 0)}
    esa, ea = rows["ESA"], rows["EA"]
    ok = (abs(stat - 17.73) <= 0.01 and abs(esa.p - 0.01762) <= 1e-4 and abs(ea.p - 0.000027) <= 5e-6
          and abs(esa.p_adjusted - 0.017622) <= 1e-4 and abs(ea.p_adjusted - 0.000054) <= 1e-5)
    report("statistical reproduction", ok,
           f"X2r={stat:.4f}; ESA p={esa.p:.5f} adj={esa.p_adjusted:.6f}; "
           f"EA p={ea.p:.6f} adj={ea.p_adjusted:.6f}")


# --- operators and problem examples ----------------------------------------------------------

def test_operator_bit_exactness():
    p1, p2 = [1, 2, 3, 4, 5, 6, 7, 8], [2, 4, 6, 8, 7, 5, 3, 1]
    ox = [h.tolist() for h in ox_crossover(p1, p2, 2, 5)]
    hx = [h.tolist() for h in hx_crossover(p1, p2)]
    srx = [h.tolist() for h in srx_crossover(
        [1, 2, 3, 4, 0, 9, 10, 11, 12, 0, 13, 14, 15, 16, 0, 5, 6, 7, 8],
        [1, 12, 6, 3, 0, 2, 4, 7, 11, 0, 5, 14, 16, 9, 0, 8, 13, 10, 15],
        demands=[0] + [1] * 16, capacity=4)]
    ok = (ox == [[8, 7, 3, 4, 5, 1, 2, 6], [4, 5, 6, 8, 7, 1, 2, 3]]
          and hx == [[1, 2, 3, 4, 6, 8, 7, 5], [2, 4, 6, 8, 1, 3, 5, 7]]
          and srx == [[1, 2, 3, 4, 0, 9, 10, 11, 12, 0, 6, 7, 5, 14, 0, 16, 8, 13, 15],
                      [1, 12, 6, 3, 0, 2, 4, 7, 11, 0, 9, 10, 13, 14, 0, 15, 16, 5, 8]])
    report("operator bit-exactness", ok, f"OX {ox}; HX {hx}; SRX {srx}")


def test_problem_examples():
    nqp = nqp_collisions(None, [4, 3, 1, 6, 5, 8, 2, 7])
    b = BppInstance([20, 20, 20, 30, 30, 30, 50, 50, 50], 100)
    bins = bpp_bins(b, [1, 4, 7, 2, 5, 8, 3, 6, 9])
    rng = np.random.default_rng(2)
    m = rng.integers(1, 100, (10, 10)).astype(float)
    np.fill_diagonal(m, 0)
    x = [5, 1, 3, 0, 2, 4, 0, 7, 9, 8, 6]
    legs = [0, 5, 1, 3, 0, 2, 4, 0, 7, 9, 8, 6, 0]
    expected = sum(m[i, j] for i, j in zip(legs, legs[1:]))
    f, feas = cvrp_objective_and_feasibility(CvrpInstance(m, [0] + [1] * 9, 4), x)
    ok = nqp == 3 and bins == 3 and feas and math.isclose(f, expected)
    report("problem examples", ok, f"NQP collisions {nqp}; BPP bins {bins}; "
                                   f"CVRP expansion {f} vs {expected}")


# --- search quality ---------------------------------------------------------------------------

def test_optimum_hitting():
    o30, t1 = gb_results("oliver30")
    b52, t2 = gb_results("berlin52")
    ok = min(o30) == 420 and np.mean(o30) <= 421 and min(b52) == 7542 and t1 + t2 < 120
    report("optimum hitting", ok,
           f"oliver30 best {min(o30):.0f} mean {np.mean(o30):.1f}; berlin52 best {min(b52):.0f} "
           f"mean {np.mean(b52):.1f}; {t1 + t2:.1f} s")


def _brute_tsp(p):
    return min(tsp_objective(p, (0,) + q) for q in itertools.permutations(range(1, p.n)))


def test_oracle_equivalence():
    t = time.perf_counter()
    bad = []
    for k in range(20):
        rng = np.random.default_rng(100 + k)
        n = int(rng.integers(4, 9))
        if k % 2:
            m = rng.integers(1, 100, (n, n)).astype(float)
            np.fill_diagonal(m, 0)
            p = TspInstance(m, name=f"atsp{k}")
        else:
            p = random_euclidean(n, 100 + k)
        best = min(run(p, seed=s).best_f for s in range(3))
        if not math.isclose(best, _brute_tsp(p)):
            bad.append(p.name)
    for k in range(10):
        n = 4 + k % 4
        opt = min(nqp_collisions(None, q) for q in itertools.permutations(range(1, n + 1)))
        best = min(run(NqpInstance(n), seed=s).best_f for s in range(3))
        if best != opt:
            bad.append(f"nqp{n}")
    dt = time.perf_counter() - t
    report("oracle equivalence", not bad and dt < 60,
           f"20 TSP/ATSP + 10 NQP, mismatches {bad or 'none'}, {dt:.1f} s")


# --- property suites -----------------------------------------------------------------------

_CASES = {"n": 0}
PROPS = settings(max_examples=200, deadline=None)


def _league(tn, pt, seed):
    rng = np.random.default_rng(seed)
    teams = []
    for t in range(tn):
        qs = rng.uniform(0, 1, pt)
        teams.append(Team([Player(np.array([t, j]), 1 / q, q) for j, q in enumerate(qs)],
                          MoveKind.TWO_OPT))
    return League(teams)


@PROPS
@given(st.integers(2, 8), st.integers(1, 8), st.integers(0, 2 ** 31))
def _prop_transfer(tn, pt, seed):
    _CASES["n"] += 1
    lg = _league(tn, pt, seed)
    table = list(np.random.default_rng(seed).permutation(tn))
    members = sorted(tuple(p.genotype) for t in lg.teams for p in t.players)
    # the r-th team from the top swaps its r-th worst for the r-th best of the r-th from the bottom
    moves = []
    for r in range(1, tn // 2 + 1):
        top, bottom = lg.teams[table[r - 1]], lg.teams[table[tn - r]]
        rr = min(r, pt)
        moves.append((top, bottom, top.players[top.order()[pt - rr]],
                      bottom.players[bottom.order()[rr - 1]]))
    transfer_period(lg, table)
    assert sorted(tuple(p.genotype) for t in lg.teams for p in t.players) == members
    assert all(len(t.players) == pt for t in lg.teams)
    for top, bottom, down, up in moves:
        assert any(p is up for p in top.players) and any(p is down for p in bottom.players)


@PROPS
@given(st.integers(4, 9), st.sampled_from(list(MoveKind)), st.integers(0, 2 ** 31))
def _prop_training(n, move, seed):
    _CASES["n"] += 1
    p = random_euclidean(n, seed % 997)
    s = Search(p, RngStream(seed).gen)
    g = p.random_solution(s.gen)
    f = s.evaluate(g)
    pl = Player(g, f, s.quality(f))
    training_session(pl, move, s)
    assert pl.f <= f and math.isclose(tsp_objective(p, pl.genotype), pl.f)


@settings(max_examples=100, deadline=None)
@given(st.integers(4, 9), st.integers(0, 2 ** 31))
def _prop_monotone_best(n, seed):
    _CASES["n"] += 1
    rec = run(random_euclidean(n, seed % 997), GbConfig(tn=2, pt=4, max_seasons=2), seed,
              keep_trace=True)
    fs = [f for _, f in rec.trace]
    evals = [e for e, _ in rec.trace]
    assert all(a > b for a, b in zip(fs, fs[1:])) and evals == sorted(evals)
    assert fs[-1] == rec.best_f


@PROPS
@given(st.integers(2, 6).flatmap(lambda k: st.lists(st.lists(st.floats(0, 10), min_size=k,
                                                             max_size=k), min_size=2, max_size=10)))
def _prop_friedman(m):
    _CASES["n"] += 1
    table, _ = friedman(m)
    assert math.isclose(table.rank_sums.sum(), table.h * table.k * (table.k + 1) / 2)


@PROPS
@given(st.floats(-1e3, 1e3), st.floats(0.01, 50), st.integers(2, 60), st.floats(-1e3, 1e3),
       st.floats(0.01, 50), st.integers(2, 60))
def _prop_z(m1, s1, n1, m2, s2, n2):
    _CASES["n"] += 1
    a, b = StatsSample(m1, s1, n1), StatsSample(m2, s2, n2)
    assert math.isclose(z_statistic(a, b), -z_statistic(b, a), rel_tol=1e-12, abs_tol=1e-12)


@PROPS
@given(st.integers(3, 12), st.integers(0, 2 ** 31))
def _prop_roundtrip(n, seed):
    _CASES["n"] += 1
    rng = np.random.default_rng(seed)
    m = rng.integers(0, 1000, (n, n)).astype(float)
    np.fill_diagonal(m, 0)
    p = TspInstance(m, name="rt")
    q = parse_tsplib(format_tsplib(p))
    assert np.array_equal(q.matrix, p.matrix)
    r = parse_instance(serialize_instance(p))
    assert np.array_equal(r.matrix, p.matrix) and r.kind == p.kind


def test_property_suites():
    _CASES["n"] = 0
    for prop in (_prop_transfer, _prop_training, _prop_monotone_best, _prop_friedman, _prop_z,
                 _prop_roundtrip):
        prop()
    report("property suites", _CASES["n"] >= 1000,
           f"{_CASES['n']} randomized cases: conservation, transfer ranks, training elitism, "
           f"monotone best, rank-sum identity, z antisymmetry, TSPLIB/JSON round trip")


# --- substituted comparison ---------------------------------------------------------------

def test_gb_beats_ga1_and_generator_invariants():
    lines, ok = [], True
    for name in ("oliver30", "eil51", "berlin52"):
        gb, _ = gb_results(name)
        p = load_bundled(name)
        ga = [ga_run(p, ga1(), seed=s).best_f for s in range(10)]
        ok &= np.mean(gb) < np.mean(ga)
        lines.append(f"{name} GB {np.mean(gb):.1f} vs GA1 {np.mean(ga):.1f}")
    coords = bundled_coordinates()
    for name, spec in BENCHMARK.items():
        inst = generate_acvrp(coords, name, seed=0)
        members = inst.clusters()
        ids = inst.original_ids
        ok &= sorted(c for mm in members for c in mm) == list(range(1, inst.n + 1))
        ok &= len(members) == spec.clusters
        ok &= all(sum(1 for i, _ in inst.forbidden if i in mm) == spec.forbidden_per_cluster
                  for mm in members)
        forb = set(inst.forbidden)
        ok &= all(inst.valley[i, j] == kernels.FORBIDDEN_COST for i, j in forb)
        ok &= all((inst.delivery[a], inst.pickup[a]) == demand_pattern(int(i))
                  for a, i in enumerate(ids))
        for a in range(1, inst.n + 1):
            for b in range(a + 1, inst.n + 1):
                if (a, b) not in forb and (b, a) not in forb:
                    ok &= math.isclose(inst.peak[a, b], 1.3 * inst.valley[a, b])
                    i, j = ids[a], ids[b]
                    lo_to_hi = inst.valley[a, b] if i < j else inst.valley[b, a]
                    hi_to_lo = inst.valley[b, a] if i < j else inst.valley[a, b]
                    ratio = hi_to_lo / lo_to_hi
                    ok &= math.isclose(ratio, 1.2 if max(i, j) % 2 == 0 else 0.8)
    lines.append(f"{len(BENCHMARK)} AC-VRP instances satisfy the generator invariants")
    report("GB beats GA1 / generator invariants", ok, "; ".join(lines))


def test_termination_budget():
    b30, b52 = neighborhood_budget(30), neighborhood_budget(52)
    report("termination budget", b30 == 495 and b52 == 1430, f"n=30 -> {b30}; n=52 -> {b52}")
