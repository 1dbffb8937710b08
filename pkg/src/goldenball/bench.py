"""Experiment harness: run (algorithm x instance x trial) matrices and compare.

Rows are appended to ``runs.csv`` as trials finish (flushed and synced, so an
interrupted plan keeps every completed trial) and mirrored to ``runs.json``
when the plan ends.  Each trial's seed is derived from the plan seed, the
algorithm label, the instance reference and the trial index, so serial and
parallel execution produce the same rows.

CSV columns (version 1): ``algorithm, instance, trial, seed, best_f,
evals_at_best, total_evals, iterations, wall_seconds, error``.
"""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .baselines import ALGORITHMS, run_algorithm
from .core import GoldenBallError, derive_seed
from .instances import derive_vrpb, random_cvrp, random_euclidean, resolve
from .problems import CvrpInstance, NqpInstance
from .richvrp import bundled_coordinates, generate_acvrp, generate_matspspd
from .stats import (DegenerateSample, describe, friedman, friedman_critical, holm_posthoc,
                    z_classify)

CSV_VERSION = 1
CSV_COLUMNS = ("algorithm", "instance", "trial", "seed", "best_f", "evals_at_best",
               "total_evals", "iterations", "wall_seconds", "error")
TEAM_VERSIONS = ((2, 24), (4, 12), (6, 8), (8, 6))


class PlanError(GoldenBallError, ValueError):
    """Invalid plan or result set (CLI exit code 1)."""


# ---------------------------------------------------------------------------
# instance references


@lru_cache(maxsize=64)
def resolve_instance(ref: str):
    """Bundled name, file path or generator reference.

    Generator references: ``acvrp:NAME[:seed]``, ``matspspd:ATSP[:k]``,
    ``vrpb:CVRP_REF``, ``nqp:N``, ``tsp:N:seed`` and ``cvrp:N:seed``.
    """
    head, _, rest = ref.partition(":")
    try:
        if head == "acvrp" and rest:
            name, _, seed = rest.partition(":")
            return generate_acvrp(bundled_coordinates(), name, int(seed or 0))
        if head == "matspspd" and rest:
            base, _, k = rest.partition(":")
            return generate_matspspd(resolve_instance(base), int(k or 4))
        if head == "vrpb" and rest:
            cv = resolve_instance(rest)
            if not isinstance(cv, CvrpInstance):
                raise PlanError(f"{ref!r}: {rest!r} is not a CVRP instance")
            return derive_vrpb(cv)
        if head == "nqp" and rest:
            return NqpInstance(int(rest))
        if head == "tsp" and rest:
            n, seed = rest.split(":")
            return random_euclidean(int(n), int(seed))
        if head == "cvrp" and rest:
            n, seed = rest.split(":")
            return random_cvrp(int(n), int(seed))
        return resolve(ref)
    except (KeyError, FileNotFoundError, ValueError) as exc:
        if isinstance(exc, PlanError):
            raise
        raise PlanError(f"cannot resolve instance {ref!r}: {exc}") from None


# ---------------------------------------------------------------------------
# plans


@dataclass(frozen=True)
class AlgorithmSpec:
    """An engine id with optional configuration overrides, shown as ``label``."""

    algorithm: str
    label: str = ""
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.algorithm.upper() not in ALGORITHMS:
            raise PlanError(f"unknown algorithm {self.algorithm!r}; known: {ALGORITHMS}")
        if not self.label:
            object.__setattr__(self, "label", self.algorithm.upper())

    @classmethod
    def coerce(cls, x) -> "AlgorithmSpec":
        if isinstance(x, AlgorithmSpec):
            return x
        if isinstance(x, str):
            return cls(x)
        if isinstance(x, dict):
            return cls(x["algorithm"], x.get("label", ""), dict(x.get("overrides", {})))
        raise PlanError(f"cannot interpret algorithm entry {x!r}")


@dataclass
class BenchPlan:
    instances: list
    algorithms: list
    runs: int = 40
    seed: int = 0
    output: str | None = None
    parallelism: int = 1

    def __post_init__(self):
        self.algorithms = [AlgorithmSpec.coerce(a) for a in self.algorithms]
        self.instances = [str(i) for i in self.instances]

    def validate(self) -> None:
        """Check the plan and resolve every instance before anything runs."""
        if not self.algorithms:
            raise PlanError("plan has no algorithms")
        if not self.instances:
            raise PlanError("plan has no instances")
        if self.runs < 1:
            raise PlanError("runs must be at least 1")
        if self.parallelism < 1:
            raise PlanError("parallelism must be at least 1")
        labels = [a.label for a in self.algorithms]
        if len(set(labels)) != len(labels):
            raise PlanError("algorithm labels must be unique")
        for ref in self.instances:
            resolve_instance(ref)

    def tasks(self) -> list[tuple]:
        return [(a.algorithm, a.label, tuple(sorted(a.overrides.items())), ref, t,
                 derive_seed(self.seed, a.label, ref, t))
                for ref in self.instances for a in self.algorithms for t in range(self.runs)]

    @classmethod
    def from_json(cls, text: str) -> "BenchPlan":
        try:
            doc = json.loads(text)
            return cls(doc["instances"], doc["algorithms"], int(doc.get("runs", 40)),
                       int(doc.get("seed", 0)), doc.get("output"), int(doc.get("parallelism", 1)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, PlanError):
                raise
            raise PlanError(f"malformed plan: {exc}") from None


def run_trial(task: tuple) -> dict:
    """Execute one task tuple from :meth:`BenchPlan.tasks`; errors become error rows."""
    algorithm, label, overrides, ref, trial, seed = task
    row = {"algorithm": label, "instance": ref, "trial": trial, "seed": seed, "best_f": math.nan,
           "evals_at_best": 0, "total_evals": 0, "iterations": 0, "wall_seconds": 0.0, "error": ""}
    try:
        rec = run_algorithm(algorithm, resolve_instance(ref), seed, **dict(overrides))
        row.update(best_f=rec.best_f, evals_at_best=rec.evals_at_best,
                   total_evals=rec.total_evals, iterations=rec.iterations,
                   wall_seconds=round(rec.wall_seconds, 6))
    except Exception as exc:  # recorded, not fatal
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


class _CsvSink:
    def __init__(self, path: Path, resume: bool):
        self.path = path
        fresh = not (resume and path.exists())
        self.fh = path.open("w" if fresh else "a", newline="")
        self.writer = csv.DictWriter(self.fh, CSV_COLUMNS)
        if fresh:
            self.writer.writeheader()
            self._sync()

    def write(self, row: dict) -> None:
        self.writer.writerow(row)
        self._sync()

    def _sync(self) -> None:
        self.fh.flush()
        os.fsync(self.fh.fileno())

    def close(self) -> None:
        self.fh.close()


def run_plan(plan: BenchPlan, resume: bool = False,
             progress: Callable[[dict], None] | None = None) -> list[dict]:
    """Run every cell of ``plan``; returns the rows in task order.

    With ``resume`` rows already present in the output CSV are kept and their
    tasks skipped.
    """
    plan.validate()
    tasks = plan.tasks()
    out = Path(plan.output) if plan.output else None
    done: dict = {}
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        if resume and (out / "runs.csv").exists():
            for r in read_rows(out / "runs.csv"):
                done[(r["algorithm"], r["instance"], r["trial"])] = r
    sink = _CsvSink(out / "runs.csv", resume) if out is not None else None
    todo = [t for t in tasks if (t[1], t[3], t[4]) not in done]
    results = dict(done)

    def collect(row):
        results[(row["algorithm"], row["instance"], row["trial"])] = row
        if sink is not None:
            sink.write(row)
        if progress is not None:
            progress(row)

    try:
        if plan.parallelism == 1:
            for t in todo:
                collect(run_trial(t))
        else:
            with ProcessPoolExecutor(max_workers=plan.parallelism) as pool:
                for fut in as_completed([pool.submit(run_trial, t) for t in todo]):
                    collect(fut.result())
    finally:
        if sink is not None:
            sink.close()
    rows = [results[(t[1], t[3], t[4])] for t in tasks]
    if out is not None:
        (out / "runs.json").write_text(json.dumps(
            {"csv_version": CSV_VERSION, "rows": rows}, indent=1, default=_jsonable))
    return rows


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


def read_rows(path: str | Path) -> list[dict]:
    """Rows of a ``runs.csv`` with numeric fields converted."""
    rows = []
    with Path(path).open(newline="") as fh:
        for r in csv.DictReader(fh):
            missing = set(CSV_COLUMNS) - set(r)
            if missing:
                raise PlanError(f"{path}: missing columns {sorted(missing)}")
            rows.append({
                "algorithm": r["algorithm"], "instance": r["instance"], "trial": int(r["trial"]),
                "seed": int(r["seed"]), "best_f": float(r["best_f"]),
                "evals_at_best": int(r["evals_at_best"]), "total_evals": int(r["total_evals"]),
                "iterations": int(r["iterations"]), "wall_seconds": float(r["wall_seconds"]),
                "error": r["error"] or "",
            })
    return rows


# ---------------------------------------------------------------------------
# reports


def _cells(rows: Iterable[dict]) -> dict:
    cells: dict = {}
    for r in rows:
        if not r.get("error") and math.isfinite(r["best_f"]):
            cells.setdefault((r["instance"], r["algorithm"]), []).append(r)
    return cells


def summarize(rows: Sequence[dict]) -> list[dict]:
    """Per (instance, algorithm): runs, mean, std, best, mean time, mean evaluations."""
    out = []
    for (inst, alg), rs in _cells(rows).items():
        s = describe([r["best_f"] for r in rs])
        out.append({"instance": inst, "algorithm": alg, "runs": s.n, "mean": s.mean,
                    "std": s.std, "best": s.best,
                    "mean_time": float(np.mean([r["wall_seconds"] for r in rs])),
                    "mean_evals": float(np.mean([r["total_evals"] for r in rs]))})
    return out


def format_table(records: Sequence[dict], columns: Sequence[str]) -> str:
    """Plain fixed-width text table."""
    def cell(v):
        if isinstance(v, float):
            return f"{v:.4g}" if abs(v) < 1e-3 and v != 0 else f"{v:.2f}"
        return str(v)

    body = [[cell(r[c]) for c in columns] for r in records]
    widths = [max([len(c)] + [len(b[i]) for b in body]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines)


@dataclass
class CompareReport:
    control: str
    algorithms: list
    instances: list
    zmarks: list
    rank_table: object
    statistic: float
    critical: float | None
    holm: list

    def text(self) -> str:
        parts = ["z against " + self.control + " (+ significantly better control, - worse)",
                 format_table(self.zmarks, ("instance", "algorithm", "z", "mark")), "",
                 f"Friedman: H={self.rank_table.h} K={self.rank_table.k} "
                 f"X2r={self.statistic:.4f}"
                 + ("" if self.critical is None else f" critical(0.01)={self.critical:.3f}"),
                 format_table([{"algorithm": a, "avg_rank": float(r)}
                               for a, r in zip(self.algorithms, self.rank_table.rc)],
                              ("algorithm", "avg_rank")), "",
                 "Holm post-hoc",
                 format_table([{"algorithm": h.algorithm, "z": h.z, "p": h.p,
                                "p_adjusted": h.p_adjusted} for h in self.holm],
                              ("algorithm", "z", "p", "p_adjusted"))]
        return "\n".join(parts)

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "zmarks.csv").open("w", newline="") as fh:
            w = csv.DictWriter(fh, ("instance", "algorithm", "z", "mark"))
            w.writeheader()
            w.writerows(self.zmarks)
        with (out / "friedman.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("algorithm", "avg_rank", "statistic", "H", "K"))
            for a, r in zip(self.algorithms, self.rank_table.rc):
                w.writerow((a, float(r), self.statistic, self.rank_table.h, self.rank_table.k))
        with (out / "holm.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("algorithm", "z", "p", "p_adjusted"))
            for h in self.holm:
                w.writerow((h.algorithm, h.z, h.p, h.p_adjusted))
        (out / "report.txt").write_text(self.text() + "\n")


def compare(rows: Sequence[dict], control: str, minimize: bool = True) -> CompareReport:
    """z marks per instance, Friedman ranks of the means and Holm against ``control``."""
    cells = _cells(rows)
    algs = sorted({a for _, a in cells})
    if control not in algs:
        raise PlanError(f"control {control!r} not among the results ({algs})")
    if len(algs) < 2:
        raise PlanError("comparison needs at least 2 algorithms")
    insts = sorted({i for i, _ in cells if all((i, a) in cells for a in algs)})
    if len(insts) < 2:
        raise PlanError("comparison needs at least 2 instances shared by all algorithms")
    algs = [control] + [a for a in algs if a != control]
    samples = {k: describe([r["best_f"] for r in v]) for k, v in cells.items()}
    zmarks = []
    for i in insts:
        for a in algs[1:]:
            try:
                z, mark = z_classify(samples[(i, control)], samples[(i, a)], minimize)
            except DegenerateSample:
                z, mark = math.nan, "?"
            zmarks.append({"instance": i, "algorithm": a, "z": z, "mark": mark})
    means = [[samples[(i, a)].mean for a in algs] for i in insts]
    table, stat = friedman(means, minimize, algs)
    try:
        crit = friedman_critical(len(algs), 0.01)
    except ValueError:
        crit = None
    return CompareReport(control, algs, insts, zmarks, table, stat, crit, holm_posthoc(table, 0))


def teams_study(instances: Sequence[str], runs: int = 10, seed: int = 0,
                output: str | None = None, parallelism: int = 1,
                versions: Sequence[tuple[int, int]] = TEAM_VERSIONS) -> list[dict]:
    """GB with several (teams, players) splits of the same total population."""
    sizes = {tn * pt for tn, pt in versions}
    if len(sizes) != 1:
        raise PlanError(f"all versions must share one population size, got {sorted(sizes)}")
    specs = [AlgorithmSpec("GB", f"GB-{tn}x{pt}", {"tn": tn, "pt": pt}) for tn, pt in versions]
    rows = run_plan(BenchPlan(list(instances), specs, runs, seed, output, parallelism))
    return [{"version": s["algorithm"], "instance": s["instance"], "mean": s["mean"],
             "mean_time": s["mean_time"]} for s in summarize(rows)]

