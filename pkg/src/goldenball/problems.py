"""TSP, ATSP, NQP, BPP, CVRP and VRPB.

Each instance class is what the engines consume; the module-level functions
(``tsp_objective``, ``cvrp_objective_and_feasibility`` ...) are plain-Python
reference evaluators, kept separate from the compiled kernels so the two can
be checked against each other.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from . import kernels
from .core import (
    SEPARATOR,
    MalformedGenotype,
    Problem,
    as_genotype,
    check_permutation,
    check_routed,
    join_routes,
    split_routes,
)
from .operators import PERMUTATION_MOVES, ROUTED_MOVES, MoveKind

_NO_F = np.zeros(1)
_NO_I = np.zeros(1, dtype=np.int64)


def _matrix(m, name: str) -> np.ndarray:
    m = np.ascontiguousarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name}: cost matrix must be square, got shape {m.shape}")
    if np.any(np.diag(m) != 0):
        # TSPLIB files often carry a large sentinel on the diagonal
        m = m.copy()
        np.fill_diagonal(m, 0.0)
    if np.any(m < 0) or np.any(np.isnan(m)):
        raise ValueError(f"{name}: costs must be non-negative numbers")
    return m


class TspInstance(Problem):
    """Symmetric or asymmetric travelling salesman over cities ``0..n-1``."""

    code = kernels.P_TSP
    default_moves = PERMUTATION_MOVES
    crossover_kind = "hx"
    vi_move = MoveKind.VERTEX_INSERTION_INTRA

    def __init__(self, matrix, name: str = "tsp", coords=None, optimum: float | None = None):
        self.matrix = _matrix(matrix, name)
        self.n = self.matrix.shape[0]
        if self.n < 2:
            raise ValueError("a tour needs at least 2 cities")
        self.name = name
        self.coords = None if coords is None else np.asarray(coords, dtype=float)
        self.symmetric = bool(np.array_equal(self.matrix, self.matrix.T))
        self.kind = "tsp" if self.symmetric else "atsp"
        self.optimum = optimum
        self._labels = np.arange(self.n)
        self._args = (self.matrix, self.matrix, _NO_F, _NO_F, _NO_I, _NO_F)

    def kernel_args(self):
        return self._args

    def check_genotype(self, g):
        check_permutation(g, self._labels)

    def random_solution(self, gen):
        return gen.permutation(self.n).astype(np.int64)


class NqpInstance(Problem):
    """N-queens: ``g[i]`` is the row (1..N) of the queen in column i."""

    kind = "nqp"
    code = kernels.P_NQP
    quality_offset = 1.0  # f reaches 0 at the optimum
    default_moves = PERMUTATION_MOVES
    crossover_kind = "hx"
    vi_move = MoveKind.VERTEX_INSERTION_INTRA

    def __init__(self, size: int, name: str | None = None):
        if size < 1:
            raise ValueError("board size must be positive")
        self.n = int(size)
        self.name = name or f"nqp{size}"
        self.optimum = 0.0 if self.n not in (2, 3) else None
        self._labels = np.arange(1, self.n + 1)
        self._args = (np.zeros((1, 1)), np.zeros((1, 1)), _NO_F, _NO_F, _NO_I, _NO_F)

    def kernel_args(self):
        return self._args

    def check_genotype(self, g):
        check_permutation(g, self._labels)

    def random_solution(self, gen):
        return (gen.permutation(self.n) + 1).astype(np.int64)


class BppInstance(Problem):
    """Bin packing decoded by next-fit over the item order (items ``1..n``)."""

    kind = "bpp"
    code = kernels.P_BPP
    default_moves = PERMUTATION_MOVES
    crossover_kind = "hx"
    vi_move = MoveKind.VERTEX_INSERTION_INTRA

    def __init__(self, sizes: Sequence[float], capacity: float, name: str = "bpp",
                 optimum: float | None = None):
        sizes = np.asarray(sizes, dtype=np.float64)
        if sizes.ndim != 1 or sizes.size == 0 or np.any(sizes <= 0):
            raise ValueError("item sizes must be a non-empty vector of positive numbers")
        if capacity <= 0 or np.any(sizes > capacity):
            raise ValueError("every item must fit in an empty bin")
        self.sizes = sizes
        self.capacity = float(capacity)
        self.n = sizes.size
        self.name = name
        self.optimum = optimum
        self._labels = np.arange(1, self.n + 1)
        a = np.concatenate(([0.0], sizes))
        self._args = (np.zeros((1, 1)), np.zeros((1, 1)), a, _NO_F, _NO_I,
                      np.array([self.capacity]))

    def kernel_args(self):
        return self._args

    def check_genotype(self, g):
        check_permutation(g, self._labels)

    def random_solution(self, gen):
        return (gen.permutation(self.n) + 1).astype(np.int64)


class _Routed(Problem):
    """Shared machinery for depot-based routed problems (depot = node 0)."""

    routed = True
    default_moves = ROUTED_MOVES
    crossover_kind = "srx"
    vi_move = MoveKind.VERTEX_INSERTION_INTER
    cluster_of = None

    def check_genotype(self, g):
        check_routed(g, self.n)

    def route_cost(self, route: Sequence[int]) -> float:
        m = self.matrix
        prev, s = 0, 0.0
        for v in route:
            s += m[prev, v]
            prev = v
        return float(s + m[prev, 0])

    def prepare(self, g):
        # keep one empty route available so inter-route moves can open a vehicle
        g = join_routes(split_routes(g))
        return np.concatenate((g, [SEPARATOR])).astype(np.int64)


class CvrpInstance(_Routed):
    """Capacitated VRP; ``demands[0]`` belongs to the depot and must be 0."""

    kind = "cvrp"
    code = kernels.P_CVRP

    def __init__(self, matrix, demands: Sequence[float], capacity: float, name: str = "cvrp",
                 coords=None, optimum: float | None = None):
        self.matrix = _matrix(matrix, name)
        self.demands = np.asarray(demands, dtype=np.float64)
        if self.demands.shape != (self.matrix.shape[0],):
            raise ValueError(f"{name}: need one demand per node including the depot")
        if self.demands[0] != 0:
            raise ValueError(f"{name}: depot demand must be 0")
        if np.any(self.demands[1:] <= 0) or np.any(self.demands > capacity):
            raise ValueError(f"{name}: customer demands must lie in (0, Q]")
        self.capacity = float(capacity)
        self.n = self.matrix.shape[0] - 1
        self.name = name
        self.coords = None if coords is None else np.asarray(coords, dtype=float)
        self.optimum = optimum
        self._args = (self.matrix, self.matrix, self.demands, _NO_F, _NO_I,
                      np.array([self.capacity]))

    def kernel_args(self):
        return self._args

    def can_append(self, route, items) -> bool:
        d = self.demands
        return float(d[list(route)].sum() + d[list(items)].sum()) <= self.capacity

    def random_solution(self, gen):
        routes: list[list[int]] = [[]]
        load = 0.0
        for c in gen.permutation(np.arange(1, self.n + 1)):
            c = int(c)
            if load + self.demands[c] > self.capacity:
                routes.append([])
                load = 0.0
            routes[-1].append(c)
            load += self.demands[c]
        return join_routes(routes)


LINEHAUL = 1
BACKHAUL = 2


class VrpbInstance(_Routed):
    """VRP with backhauls: linehaul deliveries precede backhaul pickups in a route."""

    kind = "vrpb"
    code = kernels.P_VRPB

    def __init__(self, matrix, delivery: Sequence[float], pickup: Sequence[float],
                 classes: Sequence[int], capacity: float, name: str = "vrpb", coords=None):
        self.matrix = _matrix(matrix, name)
        n1 = self.matrix.shape[0]
        self.delivery = np.asarray(delivery, dtype=np.float64)
        self.pickup = np.asarray(pickup, dtype=np.float64)
        self.classes = np.asarray(classes, dtype=np.int64)
        for arr, lab in ((self.delivery, "delivery"), (self.pickup, "pickup"),
                         (self.classes, "classes")):
            if arr.shape != (n1,):
                raise ValueError(f"{name}: {lab} needs one entry per node including the depot")
        if not np.all(np.isin(self.classes[1:], (LINEHAUL, BACKHAUL))):
            raise ValueError(f"{name}: customer classes must be {LINEHAUL} or {BACKHAUL}")
        if np.any(self.delivery > capacity) or np.any(self.pickup > capacity):
            raise ValueError(f"{name}: a demand exceeds the capacity")
        self.capacity = float(capacity)
        self.n = n1 - 1
        self.name = name
        self.coords = None if coords is None else np.asarray(coords, dtype=float)
        self.optimum = None
        self._args = (self.matrix, self.matrix, self.delivery, self.pickup, self.classes,
                      np.array([self.capacity]))

    def kernel_args(self):
        return self._args

    def can_append(self, route, items) -> bool:
        return vrpb_route_ok(self, list(route) + list(items))

    def random_solution(self, gen):
        def pack(ids, dem):
            out: list[list[int]] = []
            load = np.inf
            for c in ids:
                c = int(c)
                if load + dem[c] > self.capacity:
                    out.append([])
                    load = 0.0
                out[-1].append(c)
                load += dem[c]
            return out

        cust = np.arange(1, self.n + 1)
        lh = pack(gen.permutation(cust[self.classes[1:] == LINEHAUL]), self.delivery)
        bh = pack(gen.permutation(cust[self.classes[1:] == BACKHAUL]), self.pickup)
        routes = [(lh[k] if k < len(lh) else []) + (bh[k] if k < len(bh) else [])
                  for k in range(max(len(lh), len(bh)))]
        return join_routes(routes)


# ---------------------------------------------------------------------------
# reference evaluators (plain Python, independent of the kernels)


def tsp_objective(inst: TspInstance, tour: Sequence[int]) -> float:
    """Closed-tour length using directed costs."""
    t = [int(v) for v in tour]
    if sorted(t) != list(range(inst.n)):
        raise MalformedGenotype(f"tour must be a permutation of 0..{inst.n - 1}")
    m = inst.matrix
    return float(sum(m[t[k], t[(k + 1) % len(t)]] for k in range(len(t))))


def _routes(g: Sequence[int], n: int) -> list[list[int]]:
    g = as_genotype(g)
    check_routed(g, n)
    return [list(map(int, r)) for r in split_routes(g)]


def _route_len(m: np.ndarray, route: list[int]) -> float:
    path = [0] + route + [0]
    return float(sum(m[a, b] for a, b in zip(path, path[1:])))


def cvrp_objective_and_feasibility(inst: CvrpInstance, routed: Sequence[int]) -> tuple[float, bool]:
    """Total route length and whether every route respects the capacity."""
    routes = _routes(routed, inst.n)
    cost = sum(_route_len(inst.matrix, r) for r in routes)
    ok = all(sum(inst.demands[c] for c in r) <= inst.capacity for r in routes)
    return cost, ok


def vrpb_route_ok(inst: VrpbInstance, route: Sequence[int]) -> bool:
    kinds = [inst.classes[c] for c in route]
    if BACKHAUL in kinds and LINEHAUL in kinds[kinds.index(BACKHAUL):]:
        return False
    dl = sum(inst.delivery[c] for c in route if inst.classes[c] == LINEHAUL)
    pk = sum(inst.pickup[c] for c in route if inst.classes[c] == BACKHAUL)
    return dl <= inst.capacity and pk <= inst.capacity


def vrpb_feasibility(inst: VrpbInstance, routed: Sequence[int]) -> bool:
    """Linehaul-before-backhaul order and both per-phase capacities on every route."""
    return all(vrpb_route_ok(inst, r) for r in _routes(routed, inst.n))


def vrpb_objective_and_feasibility(inst: VrpbInstance, routed: Sequence[int]) -> tuple[float, bool]:
    routes = _routes(routed, inst.n)
    return (sum(_route_len(inst.matrix, r) for r in routes),
            all(vrpb_route_ok(inst, r) for r in routes))


def nqp_collisions(inst: NqpInstance | None, g: Sequence[int]) -> int:
    """Unordered column pairs whose queens share a diagonal."""
    q = [int(v) for v in g]
    if inst is not None and sorted(q) != list(range(1, inst.n + 1)):
        raise MalformedGenotype(f"board must be a permutation of 1..{inst.n}")
    return sum(1 for i in range(len(q)) for j in range(i + 1, len(q))
               if abs(i - j) == abs(q[i] - q[j]))


def bpp_bins(inst: BppInstance, g: Sequence[int]) -> int:
    """Next-fit bin count: an item that overflows the open bin starts a new one."""
    items = [int(v) for v in g]
    if sorted(items) != list(range(1, inst.n + 1)):
        raise MalformedGenotype(f"order must be a permutation of items 1..{inst.n}")
    bins, acc = 1, 0.0
    for it in items:
        s = inst.sizes[it - 1]
        if acc + s > inst.capacity:
            bins, acc = bins + 1, s
        else:
            acc += s
    return bins
