"""Neighbourhood moves and recombination operators.

Moves take positions into the genotype array.  Pass ``routed=True`` for
routed genotypes so that label 0 is read as a route separator; intra-route
moves then refuse arguments that straddle a separator.
"""
from __future__ import annotations

from enum import IntEnum
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .core import (
    SEPARATOR,
    InfeasibleOffspring,
    InvalidMove,
    MalformedGenotype,
    as_genotype,
    join_routes,
    split_routes,
)


class MoveKind(IntEnum):
    TWO_OPT = kernels.TWO_OPT
    THREE_OPT = kernels.THREE_OPT
    VERTEX_INSERTION_INTRA = kernels.VI_INTRA
    VERTEX_INSERTION_INTER = kernels.VI_INTER
    SWAP_INTRA = kernels.SWAP_INTRA
    SWAP_INTER = kernels.SWAP_INTER

    @property
    def inter(self) -> bool:
        return self in (MoveKind.VERTEX_INSERTION_INTER, MoveKind.SWAP_INTER)


class CrossoverKind:
    OX = "ox"
    HX = "hx"
    SRX = "srx"
    LRX = "lrx"
    CLUSTER_HRX = "cluster-hrx"


# permutation-problem pool and its routed counterpart
PERMUTATION_MOVES = (MoveKind.TWO_OPT, MoveKind.THREE_OPT, MoveKind.SWAP_INTRA,
                     MoveKind.VERTEX_INSERTION_INTRA)
ROUTED_MOVES = (MoveKind.TWO_OPT, MoveKind.VERTEX_INSERTION_INTRA,
                MoveKind.VERTEX_INSERTION_INTER, MoveKind.SWAP_INTER)

THREE_OPT_VARIANTS = (
    "reverse-b",
    "reverse-c",
    "reverse-both",
    "segment-swap",
    "swap-reverse-c",
    "swap-reverse-b",
    "swap-reverse-both",
)


def parse_move(name: str | int) -> MoveKind:
    if isinstance(name, (int, np.integer)):
        return MoveKind(int(name))
    key = str(name).strip().lower()
    aliases = {
        "2-opt": MoveKind.TWO_OPT, "2opt": MoveKind.TWO_OPT, "two-opt": MoveKind.TWO_OPT,
        "3-opt": MoveKind.THREE_OPT, "3opt": MoveKind.THREE_OPT, "three-opt": MoveKind.THREE_OPT,
        "vi": MoveKind.VERTEX_INSERTION_INTRA, "insertion": MoveKind.VERTEX_INSERTION_INTRA,
        "vi-intra": MoveKind.VERTEX_INSERTION_INTRA, "vi-inter": MoveKind.VERTEX_INSERTION_INTER,
        "swap": MoveKind.SWAP_INTRA, "swapping": MoveKind.SWAP_INTRA,
        "swap-intra": MoveKind.SWAP_INTRA, "swap-inter": MoveKind.SWAP_INTER,
    }
    if key not in aliases:
        raise ValueError(f"unknown move {name!r}; known: {sorted(aliases)}")
    return aliases[key]


# ---------------------------------------------------------------------------
# argument checks


def _check_pos(g: np.ndarray, *positions: int) -> None:
    for p in positions:
        if not 0 <= p < g.size:
            raise InvalidMove(f"position {p} outside genotype of length {g.size}")


def _check_customer(g: np.ndarray, p: int, routed: bool) -> None:
    _check_pos(g, p)
    if routed and g[p] == SEPARATOR:
        raise InvalidMove(f"position {p} holds a route separator")


def _check_same_route(g: np.ndarray, lo: int, hi: int, routed: bool) -> None:
    if routed and np.any(g[lo:hi + 1] == SEPARATOR):
        raise InvalidMove(f"positions {lo}..{hi} span a route separator")


# ---------------------------------------------------------------------------
# moves


def two_opt(g: Sequence[int], i: int, j: int, routed: bool = False) -> np.ndarray:
    """Reverse the segment ``g[i..j]`` (inclusive)."""
    g = as_genotype(g)
    _check_pos(g, i, j)
    if i > j:
        raise InvalidMove(f"2-opt needs i <= j, got {i} > {j}")
    _check_same_route(g, i, j, routed)
    out = np.empty_like(g)
    kernels.reverse_into(g, i, j, out)
    return out


def three_opt(g: Sequence[int], cuts: Sequence[int], variant: int | str,
              routed: bool = False) -> np.ndarray:
    """Remove three edges (after positions ``cuts``) and reconnect.

    With ``A = g[:c1+1]``, ``B = g[c1+1:c2+1]``, ``C = g[c2+1:c3+1]`` and
    ``D`` the tail, the seven variants rebuild ``A X Y D`` where ``(X, Y)`` is
    one of (B', C), (B, C'), (B', C'), (C, B), (C', B), (C, B'), (C', B');
    a prime marks reversal.  The identity reconnection is not a variant.
    """
    g = as_genotype(g)
    if isinstance(variant, str):
        if variant not in THREE_OPT_VARIANTS:
            raise InvalidMove(f"unknown 3-opt variant {variant!r}")
        variant = THREE_OPT_VARIANTS.index(variant)
    if not 0 <= int(variant) < 7:
        raise InvalidMove(f"3-opt variant must be in 0..6, got {variant}")
    if len(cuts) != 3:
        raise InvalidMove("3-opt needs exactly three cuts")
    c1, c2, c3 = (int(c) for c in cuts)
    if not c1 < c2 < c3:
        raise InvalidMove(f"3-opt cuts must increase strictly, got {cuts}")
    _check_pos(g, c1, c3)
    _check_same_route(g, c1, c3, routed)
    out = np.empty_like(g)
    kernels.three_opt_into(g, c1, c2, c3, int(variant), out)
    return out


def vertex_insertion(g: Sequence[int], frm: int, to: int, routed: bool = False) -> np.ndarray:
    """Move ``g[frm]`` so that it ends up at index ``to`` of the result."""
    g = as_genotype(g)
    _check_customer(g, frm, routed)
    _check_pos(g, to)
    out = np.empty_like(g)
    kernels.insert_into(g, frm, to, out)
    return out


def swap(g: Sequence[int], a: int, b: int, routed: bool = False) -> np.ndarray:
    """Exchange the labels at positions ``a`` and ``b``."""
    g = as_genotype(g)
    _check_customer(g, a, routed)
    _check_customer(g, b, routed)
    out = np.empty_like(g)
    kernels.swap_into(g, a, b, out)
    return out


def apply_move(move: MoveKind, g: np.ndarray, gen: np.random.Generator,
               routed: bool = False) -> np.ndarray | None:
    """Random instance of ``move``; ``None`` when the genotype admits none."""
    g = as_genotype(g)
    out = np.empty_like(g)
    if not kernels.random_move(int(move), routed, g, out, gen):
        return None
    return out


# ---------------------------------------------------------------------------
# permutation crossovers


def _check_parents(p1: np.ndarray, p2: np.ndarray) -> None:
    if p1.size != p2.size:
        raise MalformedGenotype(f"parents differ in length ({p1.size} vs {p2.size})")
    s1 = np.sort(p1)
    if np.any(s1[1:] == s1[:-1]):
        raise MalformedGenotype("parents must be pure permutations (repeated label; routed input?)")
    if not np.array_equal(s1, np.sort(p2)):
        raise MalformedGenotype("parents are permutations of different label sets")


def ox_crossover(p1: Sequence[int], p2: Sequence[int], cut1: int, cut2: int
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Order crossover.

    Child k keeps ``parent_k[cut1:cut2]`` in place; the free positions are
    filled from index ``cut2`` onward (wrapping) with the other parent's
    labels read cyclically from ``cut2``, skipping those already present.
    """
    p1, p2 = as_genotype(p1), as_genotype(p2)
    _check_parents(p1, p2)
    if not 0 <= cut1 < cut2 <= p1.size:
        raise InvalidMove(f"OX cuts need 0 <= cut1 < cut2 <= {p1.size}, got ({cut1}, {cut2})")
    return kernels.ox(p1, p2, cut1, cut2)


def hx_crossover(p1: Sequence[int], p2: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Half crossover: keep the first ``n // 2`` genes, append the rest in the other parent's order."""
    p1, p2 = as_genotype(p1), as_genotype(p2)
    _check_parents(p1, p2)
    if p1.size == 0:
        return p1.copy(), p2.copy()
    return kernels.hx(p1, p2)


# ---------------------------------------------------------------------------
# route-based crossover

RouteKey = Callable[[Sequence[int]], float]
CanAppend = Callable[[Sequence[int], Sequence[int]], bool]


def capacity_rule(demands: Sequence[float], capacity: float) -> CanAppend:
    """``can_append`` predicate for a plain per-route demand limit."""
    dem = np.asarray(demands, dtype=float)

    def can_append(route, items):
        return float(dem[list(route)].sum() + dem[list(items)].sum()) <= capacity

    return can_append


def _route_child(keep_from: np.ndarray, order_from: np.ndarray, long: bool,
                 key: RouteKey, can_append: CanAppend,
                 block_of: np.ndarray | None) -> np.ndarray:
    routes = [list(map(int, r)) for r in split_routes(keep_from)]
    n_r = len(routes)
    n_keep = (n_r + 1) // 2 if long else n_r // 2
    ranked = sorted(range(n_r), key=lambda k: (-key(routes[k]) if long else key(routes[k])))
    chosen = sorted(ranked[:n_keep])
    kept = [routes[k] for k in chosen]
    placed = {c for r in kept for c in r}

    # leftovers in the other parent's visiting order, grouped into blocks
    leftovers = [int(c) for c in order_from if c != SEPARATOR and int(c) not in placed]
    if block_of is None:
        blocks = [[c] for c in leftovers]
    else:
        groups: dict[int, list[int]] = {}
        for c in leftovers:
            groups.setdefault(int(block_of[c]), []).append(c)
        blocks = list(groups.values())

    out = kept
    current: list[int] | None = None
    for blk in blocks:
        if current is not None and can_append(current, blk):
            current.extend(blk)
            continue
        if not can_append([], blk):
            raise InfeasibleOffspring(f"items {blk} do not fit an empty route")
        current = list(blk)
        out.append(current)
    return join_routes(out)


def srx_crossover(p1: Sequence[int], p2: Sequence[int], mode: str = "short", *,
                  demands: Sequence[float] | None = None, capacity: float | None = None,
                  can_append: CanAppend | None = None, route_key: RouteKey | None = None,
                  block_of: Sequence[int] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Short (``mode="short"``) or long route crossover on routed genotypes.

    Child k keeps verbatim, in their original order, the ``floor(R/2)``
    shortest (or ``ceil(R/2)`` longest) of parent k's R non-empty routes,
    ranked by ``route_key`` (customer count by default, ties by position).
    The remaining customers follow in the other parent's visiting order,
    appended to the last open route while ``can_append`` allows, otherwise
    starting a new route.  ``block_of`` maps customers to groups moved as
    one unit (cluster-level variant).

    Parameters
    ----------
    demands, capacity
        Shorthand for ``can_append=capacity_rule(demands, capacity)``.

    Raises
    ------
    InfeasibleOffspring
        When some leftover block does not fit even an empty route.
    """
    p1, p2 = as_genotype(p1), as_genotype(p2)
    c1 = np.sort(p1[p1 != SEPARATOR])
    if not np.array_equal(c1, np.sort(p2[p2 != SEPARATOR])) or np.any(c1[1:] == c1[:-1]):
        raise MalformedGenotype("parents must visit the same customers exactly once")
    if mode not in ("short", "long"):
        raise ValueError(f"mode must be 'short' or 'long', got {mode!r}")
    if can_append is None:
        if capacity is not None:
            if demands is None:
                raise ValueError("capacity given without demands")
            can_append = capacity_rule(demands, capacity)
        else:
            can_append = lambda route, items: True  # noqa: E731
    key = route_key or len
    blocks = None if block_of is None else np.asarray(block_of)
    long = mode == "long"
    return (_route_child(p1, p2, long, key, can_append, blocks),
            _route_child(p2, p1, long, key, can_append, blocks))


# ---------------------------------------------------------------------------
# dispatch used by the engines


def random_cuts(n: int, gen: np.random.Generator) -> tuple[int, int]:
    c1 = int(gen.integers(0, n))
    c2 = int(gen.integers(c1 + 1, n + 1))
    return c1, c2


def recombine(problem, p1: np.ndarray, p2: np.ndarray, kind: str,
              gen: np.random.Generator, evaluate: Callable | None = None
              ) -> list[tuple[np.ndarray | None, float]]:
    """Two ``(child, f)`` pairs from feasible parents of ``problem``.

    ``evaluate`` scores each candidate (pass a counting evaluator from an
    engine; defaults to ``problem.fitness``).  Route kinds try the short
    variant and fall back to the long one per child; a child that is still
    infeasible comes back as ``(None, inf)``.
    """
    evaluate = evaluate or problem.fitness
    if kind == CrossoverKind.OX:
        c1, c2 = random_cuts(p1.size, gen)
        return [(h, evaluate(h)) for h in kernels.ox(p1, p2, c1, c2)]
    if kind == CrossoverKind.HX:
        return [(h, evaluate(h)) for h in kernels.hx(p1, p2)]
    if kind not in (CrossoverKind.SRX, CrossoverKind.LRX, CrossoverKind.CLUSTER_HRX, "hrx"):
        raise ValueError(f"unknown crossover {kind!r}")
    block_of = problem.cluster_of if kind == CrossoverKind.CLUSTER_HRX else None
    modes = (True,) if kind == CrossoverKind.LRX else (False, True)
    out = []
    for keep_from, order_from in ((p1, p2), (p2, p1)):
        best: tuple[np.ndarray | None, float] = (None, np.inf)
        for long in modes:
            try:
                h = _route_child(keep_from, order_from, long, problem.route_cost,
                                 problem.can_append, block_of)
            except InfeasibleOffspring:
                continue
            f = evaluate(h)
            if np.isfinite(f):
                best = (h, f)
                break
        out.append(best)
    return out
