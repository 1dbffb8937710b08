"""Rich routing problems: MA-TSP-SPD and AC-VRP-SPDVCFP, plus generators.

AC-VRP clock model
------------------
Every route leaves the depot at ``start`` (minutes after midnight, 6:00 by
default).  A leg that departs inside ``[peak_start, peak_end)`` is priced
from the peak matrix, otherwise from the valley matrix, and takes
``cost * minutes_per_unit`` minutes.  With ``enforce_end`` the vehicle must
be back by ``end`` (14:00).  Load leaves the depot at the route's total
delivery and changes by ``pickup - delivery`` at each customer; it may never
exceed the capacity.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np

from . import kernels
from .core import (
    SEPARATOR,
    GenerationError,
    MalformedGenotype,
    Problem,
    as_genotype,
    check_routed,
    join_routes,
    split_routes,
)
from .operators import ROUTED_MOVES, MoveKind
from .problems import TspInstance, _matrix

DELIVERY = 1
PICKUP = 2


# ---------------------------------------------------------------------------
# MA-TSP-SPD


class MaTspSpdInstance(Problem):
    """Multiple asymmetric TSP with exactly ``k`` routes of at most ``qmax`` customers."""

    kind = "matspspd"
    code = kernels.P_MATSP
    routed = True
    default_moves = ROUTED_MOVES
    crossover_kind = "srx"
    vi_move = MoveKind.VERTEX_INSERTION_INTER
    cluster_of = None

    def __init__(self, matrix, k: int, qmax: int, node_types: Sequence[int] | None = None,
                 name: str = "matspspd"):
        self.matrix = _matrix(matrix, name)
        self.n = self.matrix.shape[0] - 1
        if k < 1 or qmax < 1 or k * qmax < self.n:
            raise ValueError(f"{name}: {k} routes of <= {qmax} customers cannot cover {self.n}")
        if self.n < k:
            raise ValueError(f"{name}: fewer customers than routes")
        self.k, self.qmax = int(k), int(qmax)
        if node_types is None:
            node_types = [0] + [DELIVERY if i % 2 else PICKUP for i in range(1, self.n + 1)]
        self.node_types = np.asarray(node_types, dtype=np.int64)
        self.name = name
        self.optimum = None
        self._args = (self.matrix, self.matrix, np.zeros(1), np.zeros(1),
                      np.zeros(1, dtype=np.int64), np.array([float(self.k), float(self.qmax)]))

    def kernel_args(self):
        return self._args

    def check_genotype(self, g):
        check_routed(g, self.n)
        if int(np.sum(g == SEPARATOR)) != self.k - 1:
            raise MalformedGenotype(f"need exactly {self.k - 1} separators for {self.k} routes")

    def canonical(self, g):
        return as_genotype(g).copy()

    def route_cost(self, route) -> float:
        m, prev, s = self.matrix, 0, 0.0
        for v in route:
            s += m[prev, v]
            prev = v
        return float(s + m[prev, 0])

    def can_append(self, route, items) -> bool:
        return len(route) + len(items) <= self.qmax

    def random_solution(self, gen):
        n, k = self.n, self.k
        for _ in range(100):
            cuts = np.sort(gen.choice(np.arange(1, n), size=k - 1, replace=False))
            sizes = np.diff(np.concatenate(([0], cuts, [n])))
            if sizes.max() <= self.qmax:
                break
        else:
            sizes = np.full(k, n // k)
            sizes[: n % k] += 1
        perm = gen.permutation(np.arange(1, n + 1))
        bounds = np.concatenate(([0], np.cumsum(sizes)))
        return join_routes([perm[bounds[r]:bounds[r + 1]] for r in range(k)])


def generate_matspspd(atsp: TspInstance, k: int = 4) -> MaTspSpdInstance:
    """Derive an MA-TSP-SPD case from an ATSP one.

    The first node becomes the depot, odd customer indices are deliveries and
    even ones pickups, and each route holds at most ``int(p/4) + 1``
    customers where ``p`` is the total node count.
    """
    p = atsp.n
    if p < 5:
        raise ValueError(f"need at least 5 nodes, got {p}")
    qmax = p // 4 + 1
    return MaTspSpdInstance(atsp.matrix.copy(), k=k, qmax=qmax, name=f"{atsp.name}-spd")


def matspspd_feasible(inst: MaTspSpdInstance, routed: Sequence[int]) -> bool:
    """Exactly ``k`` non-empty routes, none longer than ``qmax``."""
    g = as_genotype(routed)
    check_routed(g, inst.n)
    if int(np.sum(g == SEPARATOR)) != inst.k - 1:
        raise MalformedGenotype(f"need exactly {inst.k - 1} separators for {inst.k} routes")
    routes = split_routes(g, keep_empty=True)
    return all(0 < len(r) <= inst.qmax for r in routes)


def matspspd_objective(inst: MaTspSpdInstance, routed: Sequence[int]) -> float:
    return sum(inst.route_cost(list(map(int, r))) for r in split_routes(routed))


# ---------------------------------------------------------------------------
# AC-VRP


@dataclass(frozen=True)
class Clock:
    start: float = 360.0
    peak_start: float = 480.0
    peak_end: float = 600.0
    end: float = 840.0
    minutes_per_unit: float = 1.0
    enforce_end: bool = True


class AcVrpInstance(Problem):
    """Asymmetric clustered VRP with pickups/deliveries, peak costs and forbidden arcs."""

    kind = "acvrp"
    code = kernels.P_ACVRP
    routed = True
    default_moves = (MoveKind.VERTEX_INSERTION_INTRA, MoveKind.SWAP_INTRA)
    crossover_kind = "cluster-hrx"
    vi_move = MoveKind.VERTEX_INSERTION_INTRA

    def __init__(self, valley, peak, delivery, pickup, clusters: Sequence[int],
                 capacity: float, forbidden: Sequence[tuple[int, int]] = (),
                 clock: Clock = Clock(), name: str = "acvrp", seed: int | None = None,
                 coords=None, original_ids: Sequence[int] | None = None):
        self.valley = _matrix(valley, name)
        self.peak = _matrix(peak, name)
        if self.peak.shape != self.valley.shape:
            raise ValueError(f"{name}: peak and valley matrices differ in shape")
        n1 = self.valley.shape[0]
        self.n = n1 - 1
        self.delivery = np.asarray(delivery, dtype=np.float64)
        self.pickup = np.asarray(pickup, dtype=np.float64)
        self.cluster_of = np.asarray(clusters, dtype=np.int64)
        for arr, lab in ((self.delivery, "delivery"), (self.pickup, "pickup"),
                         (self.cluster_of, "clusters")):
            if arr.shape != (n1,):
                raise ValueError(f"{name}: {lab} needs one entry per node including the depot")
        if self.cluster_of[0] != -1:
            raise ValueError(f"{name}: the depot forms its own cluster (id -1)")
        ids = self.cluster_of[1:]
        if ids.size and (ids.min() != 0 or not np.array_equal(np.unique(ids), np.arange(ids.max() + 1))):
            raise ValueError(f"{name}: cluster ids must be 0..k-1 with every cluster non-empty")
        self.n_clusters = int(ids.max()) + 1 if ids.size else 0
        self.capacity = float(capacity)
        if self.delivery[0] or self.pickup[0]:
            raise ValueError(f"{name}: the depot has no demand")
        self.forbidden = tuple(sorted((int(i), int(j)) for i, j in forbidden))
        for i, j in self.forbidden:
            if self.cluster_of[i] != self.cluster_of[j] or i == j or i == 0:
                raise ValueError(f"{name}: forbidden arc ({i},{j}) is not intra-cluster")
            if self.valley[i, j] < kernels.FORBIDDEN_COST or self.peak[i, j] < kernels.FORBIDDEN_COST:
                raise ValueError(f"{name}: forbidden arc ({i},{j}) lacks the sentinel cost")
        self.clock = clock
        self.name = name
        self.seed = seed
        self.coords = None if coords is None else np.asarray(coords, dtype=float)
        self.original_ids = None if original_ids is None else np.asarray(original_ids, dtype=np.int64)
        self.optimum = None
        params = np.array([self.capacity, clock.start, clock.peak_start, clock.peak_end,
                           clock.end, clock.minutes_per_unit, 1.0 if clock.enforce_end else 0.0])
        kc = np.where(self.cluster_of < 0, 0, self.cluster_of)
        self._args = (self.valley, self.peak, self.delivery, self.pickup, kc, params)

    def kernel_args(self):
        return self._args

    def check_genotype(self, g):
        check_routed(g, self.n)

    def clusters(self) -> list[list[int]]:
        return [list(map(int, np.flatnonzero(self.cluster_of == k))) for k in range(self.n_clusters)]

    def _route(self, route) -> tuple[float, bool]:
        r = np.asarray(route, dtype=np.int64)
        v, p, a, b, _, params = self._args
        return kernels._acvrp_route(r, 0, r.size, v, p, a, b, params)

    def route_cost(self, route) -> float:
        return float(self._route(route)[0])

    def can_append(self, route, items) -> bool:
        return bool(self._route(list(route) + list(items))[1])

    def _cluster_order(self, members: list[int], gen) -> list[int] | None:
        """Random order of one cluster avoiding forbidden arcs (randomised backtracking)."""
        allowed = self.valley < kernels.FORBIDDEN_COST
        path: list[int] = []
        left = set(members)

        def extend() -> bool:
            if not left:
                return True
            cands = [c for c in left if not path or allowed[path[-1], c]]
            for k in gen.permutation(len(cands)):
                c = cands[int(k)]
                path.append(c)
                left.discard(c)
                if extend():
                    return True
                left.add(c)
                path.pop()
            return False

        return path if extend() else None

    def random_solution(self, gen, tries: int = 20):
        """Clusters as contiguous blocks in random order, packed next-fit into routes."""
        blocks = []
        for members in self.clusters():
            for _ in range(tries):
                blk = self._cluster_order(members, gen)
                if blk is not None and self.can_append([], blk):
                    blocks.append(blk)
                    break
            else:
                raise GenerationError(f"{self.name}: no feasible single-route order for cluster {members}")
        routes: list[list[int]] = []
        for k in gen.permutation(len(blocks)):
            blk = blocks[k]
            if routes and self.can_append(routes[-1], blk):
                routes[-1].extend(blk)
            else:
                routes.append(list(blk))
        return join_routes(routes)


def acvrp_objective_and_feasibility(inst: AcVrpInstance, routed: Sequence[int]) -> tuple[float, bool]:
    """Priced cost of all routes and whether every AC-VRP rule holds (reference)."""
    g = as_genotype(routed)
    check_routed(g, inst.n)
    ck = inst.clock
    total, ok = 0.0, True
    owner: dict[int, int] = {}
    for r_idx, route in enumerate(split_routes(g)):
        route = [int(c) for c in route]
        for c in route:
            if owner.setdefault(int(inst.cluster_of[c]), r_idx) != r_idx:
                ok = False
        load = sum(inst.delivery[c] for c in route)
        ok &= load <= inst.capacity
        t = ck.start
        for a, b in zip([0] + route, route + [0]):
            m = inst.peak if ck.peak_start <= t < ck.peak_end else inst.valley
            leg = float(m[a, b])
            ok &= leg < kernels.FORBIDDEN_COST
            total += leg
            t += leg * ck.minutes_per_unit
            if b:
                load += inst.pickup[b] - inst.delivery[b]
                ok &= load <= inst.capacity
        if ck.enforce_end and t > ck.end:
            ok = False
    return total, bool(ok)


# ---------------------------------------------------------------------------
# AC-VRP generator


@dataclass(frozen=True)
class AcVrpSpec:
    """One benchmark row: node selection, capacity and forbidden arcs per cluster."""

    name: str
    nodes: int
    clusters: int
    capacity: float
    forbidden_per_cluster: int
    selection: str  # "odd", "even", "first", "last", "all"


BENCHMARK = {s.name: s for s in (
    AcVrpSpec("Osaba_50_1_1", 50, 5, 240, 5, "odd"),
    AcVrpSpec("Osaba_50_1_2", 50, 5, 160, 10, "odd"),
    AcVrpSpec("Osaba_50_1_3", 50, 10, 240, 5, "first"),
    AcVrpSpec("Osaba_50_1_4", 50, 10, 160, 10, "first"),
    AcVrpSpec("Osaba_50_2_1", 50, 5, 240, 5, "even"),
    AcVrpSpec("Osaba_50_2_2", 50, 5, 160, 10, "even"),
    AcVrpSpec("Osaba_50_2_3", 50, 10, 240, 5, "last"),
    AcVrpSpec("Osaba_50_2_4", 50, 10, 160, 10, "last"),
    AcVrpSpec("Osaba_80_1", 80, 8, 240, 5, "first"),
    AcVrpSpec("Osaba_80_2", 80, 8, 160, 10, "first"),
    AcVrpSpec("Osaba_80_3", 80, 10, 240, 5, "first"),
    AcVrpSpec("Osaba_80_4", 80, 10, 160, 10, "first"),
    AcVrpSpec("Osaba_100_1", 100, 10, 140, 5, "all"),
    AcVrpSpec("Osaba_100_2", 100, 10, 260, 10, "all"),
    AcVrpSpec("Osaba_100_3", 100, 10, 320, 10, "all"),
)}

CLUSTER_SIZE = 10


def demand_pattern(i: int) -> tuple[float, float]:
    """(delivery, pickup) of master node ``i``; the depot (0) has none."""
    if i == 0:
        return 0.0, 0.0
    return {1: (10.0, 5.0), 2: (10.0, 0.0), 3: (5.0, 3.0), 0: (5.0, 0.0)}[i % 4]


def cost_matrices(coords) -> tuple[np.ndarray, np.ndarray]:
    """Valley and peak matrices over master ids (row 0 = depot).

    For ``i < j``: ``d_ij`` is the Euclidean distance and ``d_ji`` the same
    distance times 1.2 when ``j`` is even, 0.8 otherwise.  Peak costs are
    ``1.3 * d_ij`` and ``d_ji`` times 1.2 (``j`` even) or 1.4 (``j`` odd).
    """
    xy = np.asarray(coords, dtype=float)
    euc = np.hypot(*(xy[:, None, :] - xy[None, :, :]).transpose(2, 0, 1))
    n1 = xy.shape[0]
    j_even = (np.arange(n1) % 2 == 0)[None, :]
    upper = np.triu(np.ones((n1, n1), dtype=bool), 1)
    back = np.where(j_even, 1.2, 0.8)          # multiplier for d_ji indexed at [i, j]
    back_peak = np.where(j_even, 1.2, 1.4)
    valley = np.where(upper, euc, 0.0)
    valley += np.where(upper, euc * back, 0.0).T
    peak = np.where(upper, valley * 1.3, 0.0)
    peak += np.where(upper, valley.T * back_peak, 0.0).T
    return valley, peak


def select_nodes(spec: AcVrpSpec, n_master: int = 100) -> list[list[int]]:
    """Master ids of the selected nodes, grouped by cluster."""
    groups = [list(range(c * CLUSTER_SIZE + 1, (c + 1) * CLUSTER_SIZE + 1))
              for c in range(n_master // CLUSTER_SIZE)]
    per = spec.nodes // spec.clusters
    if spec.selection == "all":
        chosen = groups
    elif spec.selection == "odd":
        chosen = groups[0::2][: spec.clusters]
    elif spec.selection == "even":
        chosen = groups[1::2][: spec.clusters]
    elif spec.selection == "first":
        chosen = [g[:per] for g in groups[: spec.clusters]]
    elif spec.selection == "last":
        chosen = [g[-per:] for g in groups[: spec.clusters]]
    else:
        raise ValueError(f"unknown selection rule {spec.selection!r}")
    if len(chosen) != spec.clusters or any(len(g) != per for g in chosen) \
            or sum(map(len, chosen)) != spec.nodes:
        raise ValueError(f"{spec.name}: selection {spec.selection!r} cannot give "
                         f"{spec.clusters} clusters of {per} from {n_master} nodes")
    return chosen


def generate_acvrp(coords, spec: AcVrpSpec | str, seed: int = 0,
                   clock: Clock = Clock()) -> AcVrpInstance:
    """Build an AC-VRP case from master coordinates (row 0 = depot).

    Forbidden arcs are drawn per cluster, uniformly among its ordered pairs
    of distinct customers, from ``seed``.
    """
    if isinstance(spec, str):
        spec = BENCHMARK[spec]
    xy = np.asarray(coords, dtype=float)
    if xy.ndim != 2 or xy.shape[1] != 2:
        raise ValueError("coordinates must be an (n+1) x 2 array with the depot first")
    n_master = xy.shape[0] - 1
    if n_master % CLUSTER_SIZE or n_master < spec.nodes:
        raise ValueError(f"{spec.name}: needs a master set of clusters of {CLUSTER_SIZE}, "
                         f"got {n_master} customers for {spec.nodes} nodes")
    groups = select_nodes(spec, n_master)
    valley_m, peak_m = cost_matrices(xy)
    ids = [0] + [i for g in groups for i in g]
    sub = np.ix_(ids, ids)
    valley, peak = valley_m[sub].copy(), peak_m[sub].copy()
    dem = np.array([demand_pattern(i) for i in ids])
    clusters = [-1] + [k for k, g in enumerate(groups) for _ in g]

    gen = np.random.default_rng(seed)
    forbidden = []
    start = 1
    for g in groups:
        local = np.arange(start, start + len(g))
        pairs = [(int(a), int(b)) for a in local for b in local if a != b]
        if spec.forbidden_per_cluster > len(pairs):
            raise ValueError(f"{spec.name}: cannot forbid {spec.forbidden_per_cluster} arcs "
                             f"in a cluster of {len(g)}")
        for k in gen.choice(len(pairs), size=spec.forbidden_per_cluster, replace=False):
            forbidden.append(pairs[int(k)])
        start += len(g)
    for i, j in forbidden:
        valley[i, j] = peak[i, j] = kernels.FORBIDDEN_COST
    return AcVrpInstance(valley, peak, dem[:, 0], dem[:, 1], clusters, spec.capacity,
                         forbidden, clock, spec.name, seed, xy[ids], ids)


# ---------------------------------------------------------------------------
# synthetic coordinates


def synthetic_coordinates(seed: int = 2015, n_clusters: int = 10) -> np.ndarray:
    """Depot at the origin and ``n_clusters`` towns of 10 customers each.

    Town centres sit 15-60 units from the depot and customers within a 4-unit
    radius of their centre, so a route through two or three towns fits the
    6:00-14:00 day at one minute per unit.  Not the original geography.
    """
    gen = np.random.default_rng(seed)
    ang = np.sort(gen.uniform(0, 2 * np.pi, n_clusters))
    rad = gen.uniform(15, 60, n_clusters)
    centres = np.column_stack((rad * np.cos(ang), rad * np.sin(ang)))
    pts = [np.zeros(2)]
    for c in centres:
        r = 4 * np.sqrt(gen.uniform(0, 1, CLUSTER_SIZE))
        t = gen.uniform(0, 2 * np.pi, CLUSTER_SIZE)
        pts.extend(c + np.column_stack((r * np.cos(t), r * np.sin(t))))
    return np.round(np.asarray(pts), 2)


def bundled_coordinates() -> np.ndarray:
    """The shipped synthetic 100-customer coordinate set (depot first)."""
    text = resources.files("goldenball.data").joinpath("acvrp_synthetic.csv").read_text()
    rows = [r for r in csv.reader(text.splitlines()) if r and not r[0].startswith("#")]
    body = rows[1:]  # header: id,x,y
    return np.array([[float(x), float(y)] for _, x, y in body])
