"""Comparison statistics: descriptive summaries, z marks, Friedman and Holm.

Standard deviations are sample (n-1) deviations throughout.  The normal CDF
uses ``math.erfc``, which is accurate to double precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import GoldenBallError

Z95 = 1.96

# Upper chi-square quantiles, df -> (alpha 0.05, alpha 0.01).
CHI2_CRITICAL = {
    1: (3.841, 6.635), 2: (5.991, 9.210), 3: (7.815, 11.345), 4: (9.488, 13.277),
    5: (11.070, 15.086), 6: (12.592, 16.812), 7: (14.067, 18.475), 8: (15.507, 20.090),
    9: (16.919, 21.666), 10: (18.307, 23.209),
}


class DegenerateSample(GoldenBallError, ValueError):
    """Samples that do not support the requested statistic."""


@dataclass(frozen=True)
class StatsSample:
    """Summary of the results of repeated runs.

    ``values`` is optional; when given, ``mean`` and ``std`` must agree with it.
    """

    mean: float
    std: float
    n: int
    values: tuple | None = None
    median: float | None = None
    iqr: float | None = None
    best: float | None = None
    worst: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise DegenerateSample("a sample needs at least one value")
        if not self.std >= 0:
            raise DegenerateSample("standard deviation must be non-negative")
        if self.values is not None:
            v = np.asarray(self.values, dtype=float)
            if v.size != self.n:
                raise DegenerateSample("value count does not match n")
            sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
            if abs(float(v.mean()) - self.mean) > 1e-9 * max(1.0, abs(self.mean)) or \
                    abs(sd - self.std) > 1e-9 * max(1.0, sd):
                raise DegenerateSample("mean/std disagree with the raw values")


def describe(values: Sequence[float]) -> StatsSample:
    """Mean, sample deviation, median, interquartile range, best and worst."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise DegenerateSample("cannot describe an empty sample")
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return StatsSample(mean=float(v.mean()), std=float(v.std(ddof=1)) if v.size > 1 else 0.0,
                       n=int(v.size), values=tuple(float(x) for x in v), median=float(med),
                       iqr=float(q3 - q1), best=float(v.min()), worst=float(v.max()))


def normal_cdf(x: float) -> float:
    """Standard normal CDF."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def two_sided_p(z: float) -> float:
    return min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))


def z_statistic(gb: StatsSample, other: StatsSample, minimize: bool = True) -> float:
    """Positive when ``gb`` is better than ``other``."""
    if gb.n < 2 or other.n < 2:
        raise DegenerateSample("z needs at least two runs per sample")
    pooled = math.sqrt(gb.std ** 2 / gb.n + other.std ** 2 / other.n)
    diff = other.mean - gb.mean if minimize else gb.mean - other.mean
    if pooled == 0.0:
        if diff == 0.0:
            return 0.0
        raise DegenerateSample("both samples have zero variance but different means")
    return diff / pooled


def z_classify(gb: StatsSample, other: StatsSample, minimize: bool = True,
               critical: float = Z95) -> tuple[float, str]:
    """``(z, mark)`` with mark '+' (GB significantly better), '-' (worse) or '*'."""
    z = z_statistic(gb, other, minimize)
    return z, "+" if z >= critical else "-" if z <= -critical else "*"


def midranks(row: Sequence[float], minimize: bool = True) -> np.ndarray:
    """Ranks 1..K (1 = best), tied values share the average of their ranks."""
    x = np.asarray(row, dtype=float)
    if not minimize:
        x = -x
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


@dataclass(frozen=True)
class RankTable:
    """Per-instance ranks (H x K) and average ranks ``rc``."""

    ranks: np.ndarray
    rc: np.ndarray
    names: tuple = field(default=())

    @property
    def h(self) -> int:
        return int(self.ranks.shape[0])

    @property
    def k(self) -> int:
        return int(self.ranks.shape[1])

    @property
    def rank_sums(self) -> np.ndarray:
        return self.ranks.sum(axis=0)

    @classmethod
    def from_average_ranks(cls, rc: Sequence[float], h: int, names: Sequence[str] = ()) -> "RankTable":
        """A table known only through its average ranks (per-instance ranks unknown)."""
        rc = np.asarray(rc, dtype=float)
        return cls(np.tile(rc, (h, 1)), rc, tuple(names))


def friedman_statistic(rc: Sequence[float], h: int) -> float:
    """``12 / (H K (K+1)) * sum((H Rc)^2) - 3 H (K+1)``."""
    rc = np.asarray(rc, dtype=float)
    k = rc.size
    return float(12.0 / (h * k * (k + 1)) * np.sum((h * rc) ** 2) - 3.0 * h * (k + 1))


def friedman(results, minimize: bool = True,
             names: Sequence[str] = ()) -> tuple[RankTable, float]:
    """Rank an H x K matrix of per-instance results and compute the Friedman statistic."""
    m = np.asarray(results, dtype=float)
    if m.ndim != 2 or m.shape[0] < 2 or m.shape[1] < 2:
        raise DegenerateSample("Friedman needs at least 2 instances and 2 algorithms")
    ranks = np.vstack([midranks(r, minimize) for r in m])
    table = RankTable(ranks, ranks.mean(axis=0), tuple(names))
    return table, friedman_statistic(table.rc, table.h)


def friedman_critical(k: int, alpha: float = 0.01) -> float:
    """Chi-square critical value with ``k - 1`` degrees of freedom (alpha 0.05 or 0.01)."""
    if alpha not in (0.05, 0.01):
        raise ValueError("tabulated levels are 0.05 and 0.01")
    try:
        pair = CHI2_CRITICAL[k - 1]
    except KeyError:
        raise ValueError(f"no tabulated critical value for {k - 1} degrees of freedom") from None
    return pair[0] if alpha == 0.05 else pair[1]


@dataclass(frozen=True)
class HolmRow:
    algorithm: object
    z: float
    p: float
    p_adjusted: float


def rank_z(table: RankTable, j: int, control: int) -> float:
    """``(Rc_j - Rc_control) / sqrt(K (K+1) / (6 H))``."""
    se = math.sqrt(table.k * (table.k + 1) / (6.0 * table.h))
    return float((table.rc[j] - table.rc[control]) / se)


def holm_adjust(ps: Sequence[float]) -> np.ndarray:
    """Holm step-down adjusted p-values, returned in the input order."""
    ps = np.asarray(ps, dtype=float)
    m = ps.size
    order = np.argsort(ps, kind="stable")
    adj = np.empty(m)
    running = 0.0
    for i, idx in enumerate(order):
        running = max(running, min(1.0, (m - i) * ps[idx]))
        adj[idx] = running
    return adj


def holm_posthoc(table: RankTable, control: int = 0) -> list[HolmRow]:
    """Every algorithm against ``control``, sorted by ascending unadjusted p."""
    if not 0 <= control < table.k:
        raise ValueError(f"control index {control} outside 0..{table.k - 1}")
    others = [j for j in range(table.k) if j != control]
    zs = [rank_z(table, j, control) for j in others]
    ps = [two_sided_p(z) for z in zs]
    adj = holm_adjust(ps)
    label = (lambda j: table.names[j]) if table.names else (lambda j: j)
    rows = [HolmRow(label(j), z, p, float(a)) for j, z, p, a in zip(others, zs, ps, adj)]
    return sorted(rows, key=lambda r: r.p)
