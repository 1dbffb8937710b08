"""Comparison engines: generational GA, island-model DGA, mutation-only EA, ESA.

All engines share the stopping rule of the GB training sessions: they halt
after ``n + n(n+1)/2`` consecutive generations (or sweeps) without improving
the best solution found, ``n`` being the instance size.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import RngStream, RunRecord, Search
from .operators import MoveKind, PERMUTATION_MOVES, parse_move, random_cuts


@dataclass(frozen=True)
class GaConfig:
    """Parameters of one generational GA (or one DGA island).

    ``crossover``/``mutation`` left as ``None`` pick the problem's natural
    operators: OX (GA1) or HX (GA2) on permutations, route crossover on
    routed problems; 2-opt on permutations, inter-route insertion on routes.
    """

    pop_size: int = 48
    pc: float = 0.95
    pm: float = 0.05
    elitist_fraction: float = 0.5
    crossover: str | None = "ox"
    mutation: MoveKind | str | None = None
    max_generations: int | None = None
    budget: int | None = None
    name: str = "GA"

    def __post_init__(self):
        if not (0 <= self.pc <= 1 and 0 <= self.pm <= 1):
            raise ValueError("pc and pm must lie in [0, 1]")
        if not 0 <= self.elitist_fraction <= 1:
            raise ValueError("elitist fraction must lie in [0, 1]")
        if self.pop_size < 2:
            raise ValueError("population needs at least 2 individuals")
        if self.mutation is not None:
            object.__setattr__(self, "mutation", parse_move(self.mutation))

    def crossover_for(self, problem) -> str:
        if problem.routed:
            return problem.crossover_kind
        return self.crossover or problem.crossover_kind

    def mutation_for(self, problem) -> MoveKind:
        if self.mutation is not None:
            return self.mutation
        return problem.vi_move if problem.routed else MoveKind.TWO_OPT


def ga1(**kw) -> GaConfig:
    """pc 0.95, pm 0.05, half elitist / half random survivors, OX + 2-opt."""
    return GaConfig(**{"pc": 0.95, "pm": 0.05, "elitist_fraction": 0.5, "crossover": "ox",
                       "name": "GA1", **kw})


def ga2(**kw) -> GaConfig:
    """pc 0.0003, pm 1.0, fully elitist survivors, HX + 2-opt."""
    return GaConfig(**{"pc": 0.0003, "pm": 1.0, "elitist_fraction": 1.0, "crossover": "hx",
                       "name": "GA2", **kw})


@dataclass(frozen=True)
class DgaConfig:
    islands: tuple
    max_generations: int | None = None
    budget: int | None = None
    name: str = "DGA"

    def __post_init__(self):
        if len(self.islands) < 2:
            raise ValueError("an island model needs at least 2 subpopulations")

    @property
    def total_size(self) -> int:
        return sum(c.pop_size for c in self.islands)


DGA1_RATES = ((0.95, 0.05), (0.90, 0.10), (0.80, 0.20), (0.75, 0.25))


def dga1(**kw) -> DgaConfig:
    """Four islands of 12 with GA1 operators and (pc, pm) per island from :data:`DGA1_RATES`."""
    isl = tuple(ga1(pop_size=12, pc=pc, pm=pm) for pc, pm in DGA1_RATES)
    return DgaConfig(isl, name="DGA1", **kw)


def dga2(problem, **kw) -> DgaConfig:
    """Four islands of 12 with GA2 settings, one GB training move per island as mutation."""
    moves = tuple(problem.default_moves) if problem.routed else PERMUTATION_MOVES
    isl = tuple(ga2(pop_size=12, mutation=m) for m in moves)
    return DgaConfig(isl, name="DGA2", **kw)


# ---------------------------------------------------------------------------
# shared GA machinery


class _Pop:
    """Genotypes and objectives of one (sub)population."""

    def __init__(self, genes: list, fs: list):
        self.genes = genes
        self.fs = fs

    def worst(self) -> int:
        return max(range(len(self.fs)), key=lambda i: (self.fs[i], i))

    def best(self) -> int:
        return min(range(len(self.fs)), key=lambda i: (self.fs[i], i))


def _random_pop(search: Search, size: int) -> _Pop:
    p = search.problem
    genes, fs = [], []
    for _ in range(size):
        g = p.prepare(p.random_solution(search.gen))
        genes.append(g)
        fs.append(search.evaluate(g))
    return _Pop(genes, fs)


def tournament(fs, gen: np.random.Generator) -> int:
    """Binary tournament: the better of two distinct random individuals (first on ties)."""
    n = len(fs)
    a = int(gen.integers(n))
    b = int(gen.integers(n - 1))
    if b >= a:
        b += 1
    return b if fs[b] < fs[a] else a


def survivors(fs, size: int, elitist_fraction: float, gen: np.random.Generator) -> list[int]:
    """``round(size * elitist_fraction)`` best (stable), the rest drawn at random from the others."""
    n_elite = int(round(size * elitist_fraction))
    order = sorted(range(len(fs)), key=lambda i: fs[i])
    elite = order[:n_elite]
    rest = order[n_elite:]
    pick = gen.choice(len(rest), size=size - n_elite, replace=False) if size > n_elite else []
    return elite + [rest[int(k)] for k in pick]


def _offspring(search: Search, pop: _Pop, cfg: GaConfig) -> _Pop:
    problem, gen = search.problem, search.gen
    kind = cfg.crossover_for(problem)
    move = cfg.mutation_for(problem)
    genes, fs = [], []
    while len(genes) < cfg.pop_size:
        ia, ib = tournament(pop.fs, gen), tournament(pop.fs, gen)
        pa, pb = pop.genes[ia], pop.genes[ib]
        kids: list = []
        if gen.random() < cfg.pc:
            if kind == "ox":
                kids = [(h, None) for h in kernels.ox(pa, pb, *random_cuts(pa.size, gen))]
            elif kind == "hx":
                kids = [(h, None) for h in kernels.hx(pa, pb)]
            else:
                made = problem.crossover(problem.canonical(pa), problem.canonical(pb), gen, kind,
                                         search.evaluate)
                kids = [(problem.prepare(h), f) if h is not None else (par.copy(), fp)
                        for (h, f), par, fp in zip(made, (pa, pb), (pop.fs[ia], pop.fs[ib]))]
        else:
            kids = [(pa.copy(), pop.fs[ia]), (pb.copy(), pop.fs[ib])]
        for g, f in kids:
            if gen.random() < cfg.pm:
                m, fm = search.mutate(g, move)
                if fm is not None and (math.isfinite(fm) or f is None or not math.isfinite(f)):
                    g, f = m, fm
            if f is None:
                f = search.evaluate(g)
            genes.append(g)
            fs.append(f)
    return _Pop(genes[: cfg.pop_size], fs[: cfg.pop_size])


def generation(search: Search, pop: _Pop, cfg: GaConfig) -> _Pop:
    """Selection, crossover, mutation and survivor selection over parents + offspring."""
    off = _offspring(search, pop, cfg)
    genes = pop.genes + off.genes
    fs = pop.fs + off.fs
    keep = survivors(fs, cfg.pop_size, cfg.elitist_fraction, search.gen)
    return _Pop([genes[i] for i in keep], [fs[i] for i in keep])


def _budget(problem, override: int | None) -> int:
    return override if override is not None else problem.budget


def ga_run(problem, config: GaConfig | None = None, seed: int = 0,
           keep_trace: bool = False) -> RunRecord:
    config = config or ga1()
    t0 = time.perf_counter()
    search = Search(problem, RngStream(seed).gen, keep_trace)
    pop = _random_pop(search, config.pop_size)
    budget = _budget(problem, config.budget)
    stall = gens = 0
    best = search.best_f
    while stall < budget and (config.max_generations is None or gens < config.max_generations):
        pop = generation(search, pop, config)
        gens += 1
        if search.best_f < best:
            best, stall = search.best_f, 0
        else:
            stall += 1
    return search.record(config.name, seed, time.perf_counter() - t0, gens)


def dga_run(problem, config: DgaConfig | None = None, seed: int = 0,
            keep_trace: bool = False) -> RunRecord:
    """Islands evolve in lockstep; a new global best replaces every other island's worst."""
    config = config or dga1()
    t0 = time.perf_counter()
    search = Search(problem, RngStream(seed).gen, keep_trace)
    pops = [_random_pop(search, c.pop_size) for c in config.islands]
    budget = _budget(problem, config.budget)
    stall = gens = 0
    best = search.best_f
    while stall < budget and (config.max_generations is None or gens < config.max_generations):
        pops = [generation(search, p, c) for p, c in zip(pops, config.islands)]
        gens += 1
        if search.best_f < best:
            best, stall = search.best_f, 0
            broadcast(pops)
        else:
            stall += 1
    return search.record(config.name, seed, time.perf_counter() - t0, gens)


def broadcast(pops: list) -> int:
    """Copy the best individual over the worst of every other island; returns its island."""
    src = min(range(len(pops)), key=lambda k: (pops[k].fs[pops[k].best()], k))
    g = pops[src].genes[pops[src].best()]
    f = pops[src].fs[pops[src].best()]
    for k, p in enumerate(pops):
        if k != src:
            w = p.worst()
            p.genes[w], p.fs[w] = g.copy(), f
    return src


# ---------------------------------------------------------------------------
# mutation-only EA and evolutionary simulated annealing


def ea_run(problem, seed: int = 0, pop_size: int = 100, elitist_fraction: float = 0.7,
           budget: int | None = None, max_generations: int | None = None,
           keep_trace: bool = False) -> RunRecord:
    """Each generation every slot breeds one insertion mutant of a tournament winner."""
    t0 = time.perf_counter()
    search = Search(problem, RngStream(seed).gen, keep_trace)
    gen = search.gen
    pop = _random_pop(search, pop_size)
    move = problem.vi_move
    budget = _budget(problem, budget)
    stall = gens = 0
    best = search.best_f
    while stall < budget and (max_generations is None or gens < max_generations):
        genes, fs = list(pop.genes), list(pop.fs)
        for _ in range(pop_size):
            i = tournament(pop.fs, gen)
            child, f = search.mutate(pop.genes[i], move)
            if f is None:
                child, f = pop.genes[i].copy(), pop.fs[i]
            genes.append(child)
            fs.append(f)
        keep = survivors(fs, pop_size, elitist_fraction, gen)
        pop = _Pop([genes[k] for k in keep], [fs[k] for k in keep])
        gens += 1
        if search.best_f < best:
            best, stall = search.best_f, 0
        else:
            stall += 1
    return search.record("EA", seed, time.perf_counter() - t0, gens)


def initial_temperature(gap: float, p: float = 0.95) -> float:
    """``-gap / ln(p)``: a worsening of ``gap`` is accepted with probability ``p`` at the start."""
    return -gap / math.log(p)


def metropolis(delta: float, temperature: float, u: float) -> bool:
    """Accept with probability ``exp(-delta / T)`` (always when not worse)."""
    if delta <= 0:
        return True
    if temperature <= 0 or not math.isfinite(delta):
        return False
    return u < math.exp(-delta / temperature)


def esa_run(problem, seed: int = 0, chains: int = 100, p0: float = 0.95, cooling: float = 0.95,
            budget: int | None = None, max_sweeps: int | None = None, t_floor: float = 1e-6,
            keep_trace: bool = False) -> RunRecord:
    """Independent annealing chains sharing one best-so-far record.

    Stops once ``budget`` sweeps have passed without a new best and the
    temperature has fallen below ``t_floor * T0`` (acceptance of any
    worsening is then negligible).
    """
    t0 = time.perf_counter()
    search = Search(problem, RngStream(seed).gen, keep_trace)
    gen = search.gen
    pop = _random_pop(search, chains)
    finite = [f for f in pop.fs if math.isfinite(f)]
    gap = (max(finite) - min(finite)) if finite else 0.0
    temp0 = initial_temperature(gap, p0) if gap > 0 else 0.0
    temp = temp0
    move = problem.vi_move
    budget = _budget(problem, budget)
    stall = sweeps = 0
    best = search.best_f
    while max_sweeps is None or sweeps < max_sweeps:
        for i in range(chains):
            cand, f = search.mutate(pop.genes[i], move)
            if f is None:
                continue
            if metropolis(f - pop.fs[i], temp, gen.random()):
                pop.genes[i], pop.fs[i] = cand, f
        temp *= cooling
        sweeps += 1
        if search.best_f < best:
            best, stall = search.best_f, 0
        else:
            stall += 1
        if stall >= budget and temp <= t_floor * temp0:
            break
    return search.record("ESA", seed, time.perf_counter() - t0, sweeps)


ALGORITHMS = ("GB", "GA1", "GA2", "DGA1", "DGA2", "EA", "ESA")


def run_algorithm(name: str, problem, seed: int, keep_trace: bool = False, **overrides) -> RunRecord:
    """Dispatch by algorithm id with its default configuration (``overrides`` tweak configs)."""
    from .engine import GbConfig, run

    key = name.upper()
    if key == "GB":
        return run(problem, GbConfig.for_problem(problem, **overrides), seed, keep_trace)
    if key == "GA1":
        return ga_run(problem, ga1(**overrides), seed, keep_trace)
    if key == "GA2":
        return ga_run(problem, ga2(**overrides), seed, keep_trace)
    if key == "DGA1":
        return dga_run(problem, dga1(**overrides), seed, keep_trace)
    if key == "DGA2":
        return dga_run(problem, dga2(problem, **overrides), seed, keep_trace)
    if key == "EA":
        return ea_run(problem, seed, keep_trace=keep_trace, **overrides)
    if key == "ESA":
        return esa_run(problem, seed, keep_trace=keep_trace, **overrides)
    raise ValueError(f"unknown algorithm {name!r}; known: {ALGORITHMS}")


