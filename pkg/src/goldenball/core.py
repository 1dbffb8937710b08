"""Shared solution model: genotypes, quality, evaluation counting, randomness.

Genotypes are 1-D ``int64`` numpy arrays.  Pure-permutation problems hold a
permutation of their labels; routed problems hold customer ids ``1..n`` with
label ``0`` used both as the depot id and as the route separator, e.g.
``(5, 1, 3, 0, 2, 4, 0, 7, 9, 8, 6)`` encodes three routes.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

SEPARATOR = 0


class GoldenBallError(Exception):
    """Base class for all package errors."""


class MalformedGenotype(GoldenBallError, ValueError):
    """Genotype violates the encoding of its problem."""


class DegenerateObjective(GoldenBallError, ValueError):
    """Objective value cannot be turned into a positive quality."""


class InvalidMove(GoldenBallError, ValueError):
    """Move arguments are illegal for the given genotype."""


class InfeasibleOffspring(GoldenBallError):
    """A recombination could not build a capacity-feasible child."""


class GenerationError(GoldenBallError):
    """Random construction of a feasible solution failed."""


@dataclass(frozen=True)
class Quality:
    f: float
    q: float


def quality_of(f: float, minimize: bool = True, offset: float = 0.0) -> Quality:
    """Map an objective value to a quality where larger is better.

    Under minimization ``q = 1 / (f + offset)``; problems whose optimum is 0
    (N-queens) use ``offset=1`` so the mapping stays finite.  Infeasible
    solutions carry ``f = inf`` and get ``q = 0``.
    """
    if not minimize:
        return Quality(f, f)
    if math.isinf(f):
        return Quality(f, 0.0)
    denom = f + offset
    if denom <= 0:
        raise DegenerateObjective(f"objective {f} gives non-positive denominator {denom}")
    return Quality(f, 1.0 / denom)


class EvaluationCounter:
    """Monotone tally of objective-function calls."""

    __slots__ = ("_count",)

    def __init__(self) -> None:
        self._count = 0

    @property
    def count(self) -> int:
        return self._count

    def add(self, k: int = 1) -> int:
        if k < 0:
            raise ValueError("evaluation counter cannot decrease")
        self._count += int(k)
        return self._count

    def __repr__(self) -> str:
        return f"EvaluationCounter({self._count})"


def _label_key(label: str) -> int:
    return int.from_bytes(hashlib.blake2b(label.encode(), digest_size=8).digest(), "little")


def derive_seed(base: int, *labels: object) -> int:
    """Stable 63-bit seed from a base seed and labels (process independent)."""
    h = hashlib.blake2b(digest_size=8)
    h.update(int(base).to_bytes(16, "little", signed=True))
    for lab in labels:
        h.update(b"\x1f")
        h.update(str(lab).encode())
    return int.from_bytes(h.digest(), "little") >> 1


class RngStream:
    """Seeded PCG64 stream with label-derived independent children.

    ``RngStream(seed).gen`` is a :class:`numpy.random.Generator`; it can be
    handed to the numba kernels, which consume the bit generator exactly as
    numpy does, so accelerated and reference paths draw identical numbers.
    """

    def __init__(self, seed: int, _path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self._path = _path
        ss = np.random.SeedSequence(self.seed & ((1 << 64) - 1), spawn_key=_path)
        self.gen = np.random.Generator(np.random.PCG64(ss))

    def child(self, label: str) -> "RngStream":
        return RngStream(self.seed, self._path + (_label_key(label),))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, path={self._path})"


# ---------------------------------------------------------------------------
# routed-genotype helpers


def as_genotype(g: Sequence[int]) -> np.ndarray:
    arr = np.asarray(g, dtype=np.int64)
    if arr.ndim != 1:
        raise MalformedGenotype("genotype must be one-dimensional")
    return arr


def split_routes(g: Sequence[int], keep_empty: bool = False) -> list[np.ndarray]:
    """Split a routed genotype on separators."""
    arr = as_genotype(g)
    cuts = np.flatnonzero(arr == SEPARATOR)
    routes = np.split(arr, cuts)
    # every piece after the first starts with the separator itself
    routes = [routes[0]] + [r[1:] for r in routes[1:]]
    if keep_empty:
        return routes
    return [r for r in routes if r.size]


def join_routes(routes: Sequence[Sequence[int]]) -> np.ndarray:
    out: list[int] = []
    for k, r in enumerate(routes):
        if k:
            out.append(SEPARATOR)
        out.extend(int(v) for v in r)
    return np.asarray(out, dtype=np.int64)


def canonicalize(g: Sequence[int]) -> np.ndarray:
    """Drop empty routes (leading, trailing or doubled separators)."""
    return join_routes(split_routes(g))


def check_permutation(g: np.ndarray, labels: np.ndarray) -> None:
    if g.size != labels.size or not np.array_equal(np.sort(g), labels):
        raise MalformedGenotype(
            f"expected a permutation of {labels.size} labels "
            f"[{labels[0] if labels.size else '-'}..{labels[-1] if labels.size else '-'}]"
        )


def check_routed(g: np.ndarray, n_customers: int) -> None:
    cust = g[g != SEPARATOR]
    if np.any(g < 0) or not np.array_equal(np.sort(cust), np.arange(1, n_customers + 1)):
        raise MalformedGenotype(
            f"routed genotype must hold each customer 1..{n_customers} exactly once"
        )


# ---------------------------------------------------------------------------


def evaluate(problem, g: Sequence[int], counter: EvaluationCounter) -> Quality:
    """Evaluate one genotype, counting the call.

    Raises :class:`MalformedGenotype` when ``g`` breaks the encoding and
    :class:`DegenerateObjective` when a feasible minimisation objective is
    not positive and the problem declares no quality offset.
    """
    arr = as_genotype(g)
    problem.check_genotype(arr)
    counter.add(1)
    f = problem.fitness(arr)
    return quality_of(f, problem.minimize, problem.quality_offset)


def canonical_quality_order(qualities: Sequence) -> list[int]:
    """Indices sorted by quality, best first; ties keep their original order."""
    qs = [q.q if isinstance(q, Quality) else float(q) for q in qualities]
    return sorted(range(len(qs)), key=lambda i: -qs[i])


def neighborhood_budget(n: int) -> int:
    """Stall budget ``n + sum(1..n)`` used by training sessions and GA stops."""
    return n + n * (n + 1) // 2


# ---------------------------------------------------------------------------
# problem abstraction


class Problem:
    """Immutable problem instance plus the hooks every engine consumes.

    Subclasses fill in the kernel bundle (``code`` plus arrays), the encoding
    check, random construction and the recombination used as custom training.
    """

    kind: str = "abstract"
    code: int = -1
    routed: bool = False
    minimize: bool = True
    quality_offset: float = 0.0
    default_moves: tuple = ()
    crossover_kind: str = "hx"
    vi_move: int = 2

    name: str
    n: int

    # kernel bundle -------------------------------------------------------
    def kernel_args(self) -> tuple:
        raise NotImplementedError

    def check_genotype(self, g: np.ndarray) -> None:
        raise NotImplementedError

    def random_solution(self, gen: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    # derived -------------------------------------------------------------
    @property
    def budget(self) -> int:
        return neighborhood_budget(self.n)

    def objective_and_feasibility(self, g: Sequence[int]) -> tuple[float, bool]:
        from . import kernels

        f, ok = kernels.objective(self.code, as_genotype(g), *self.kernel_args())
        return float(f), bool(ok)

    def fitness(self, g: Sequence[int]) -> float:
        """Objective used by the engines; ``inf`` for infeasible genotypes."""
        f, ok = self.objective_and_feasibility(g)
        return f if ok else math.inf

    def canonical(self, g: Sequence[int]) -> np.ndarray:
        """Reporting form of a working genotype."""
        return canonicalize(g) if self.routed else as_genotype(g).copy()

    def prepare(self, g: np.ndarray) -> np.ndarray:
        """Working form handed to the training moves (identity by default)."""
        return g

    def crossover(self, p1: np.ndarray, p2: np.ndarray, gen: np.random.Generator,
                  kind: str | None = None, evaluate=None):
        """Two ``(child, f)`` pairs; a child is ``None`` when no feasible one was built."""
        from . import operators

        return operators.recombine(self, p1, p2, kind or self.crossover_kind, gen, evaluate)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name!r}, n={self.n})"


# ---------------------------------------------------------------------------
# run bookkeeping shared by every engine


@dataclass
class RunRecord:
    """Outcome of one trial."""

    algorithm: str
    instance: str
    seed: int
    best_f: float
    evals_at_best: int
    total_evals: int
    wall_seconds: float
    iterations: int = 0
    best_genotype: list = None  # type: ignore[assignment]
    trace: list = None  # type: ignore[assignment]

    def row(self) -> dict:
        """Flat CSV row (genotype and trace excluded)."""
        return {
            "algorithm": self.algorithm,
            "instance": self.instance,
            "seed": self.seed,
            "best_f": self.best_f,
            "evals_at_best": self.evals_at_best,
            "total_evals": self.total_evals,
            "iterations": self.iterations,
            "wall_seconds": round(self.wall_seconds, 6),
        }


class Search:
    """Per-trial evaluation front end: kernel calls, counting, best-so-far.

    Every objective call made by an engine goes through :meth:`evaluate`,
    :meth:`train` or :meth:`mutate`, so ``counter.count`` is the exact number
    of objective evaluations and ``evals_at_best`` the count at which the
    incumbent was first reached.
    """

    def __init__(self, problem: Problem, gen: np.random.Generator, keep_trace: bool = False):
        from . import kernels

        self._k = kernels
        self.problem = problem
        self.gen = gen
        self.code = problem.code
        self.routed = problem.routed
        self.args = problem.kernel_args()
        self.counter = EvaluationCounter()
        self.best_f = math.inf
        self.best_g: np.ndarray | None = None
        self.evals_at_best = 0
        self.trace: list[tuple[int, float]] | None = [] if keep_trace else None

    def offer(self, g: np.ndarray, f: float, at: int) -> bool:
        if f < self.best_f:
            self.best_f = float(f)
            self.best_g = g.copy()
            self.evals_at_best = at
            if self.trace is not None:
                self.trace.append((at, self.best_f))
            return True
        return False

    def evaluate(self, g: np.ndarray) -> float:
        f = float(self._k.fitness(self.code, g, *self.args))
        self.offer(g, f, self.counter.add(1))
        return f

    def train(self, g: np.ndarray, f: float, move: int) -> tuple[np.ndarray, float, bool]:
        base = self.counter.count
        g2, f2, evals, last = self._k.train(self.code, self.routed, int(move), g, f,
                                            self.problem.budget, self.gen, *self.args)
        self.counter.add(int(evals))
        if last:
            self.offer(g2, float(f2), base + int(last))
        return g2, float(f2), bool(last)

    def mutate(self, g: np.ndarray, move: int) -> tuple[np.ndarray, float | None]:
        """One random move; ``f`` is None when the genotype admitted no move."""
        child, f, ok = self._k.mutate(self.code, self.routed, int(move), g, self.gen, *self.args)
        if not ok:
            return child, None
        f = float(f)
        self.offer(child, f, self.counter.add(1))
        return child, f

    def quality(self, f: float) -> float:
        return quality_of(f, self.problem.minimize, self.problem.quality_offset).q

    def record(self, algorithm: str, seed: int, wall: float, iterations: int) -> RunRecord:
        g = None if self.best_g is None else self.problem.canonical(self.best_g).tolist()
        return RunRecord(algorithm, self.problem.name, int(seed), self.best_f, self.evals_at_best,
                         self.counter.count, wall, iterations, g,
                         None if self.trace is None else list(self.trace))
