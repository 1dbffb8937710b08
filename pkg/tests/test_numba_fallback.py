"""The pure-Python kernel path must reproduce the compiled one exactly."""
import json
import os
import subprocess
import sys

import pytest

WORKER = r"""
import json, sys
from goldenball import NUMBA_ENABLED
from goldenball.baselines import run_algorithm
from goldenball.bench import resolve_instance

out = {"numba": NUMBA_ENABLED, "runs": []}
for ref, alg, kw in json.loads(sys.argv[1]):
    rec = run_algorithm(alg, resolve_instance(ref), 3, **kw)
    out["runs"].append([ref, alg, rec.best_f, rec.total_evals, rec.evals_at_best,
                        rec.best_genotype])
print(json.dumps(out))
"""

COUNTING = r"""
import json
from goldenball import NUMBA_ENABLED, kernels
from goldenball.baselines import run_algorithm
from goldenball.bench import resolve_instance

assert not NUMBA_ENABLED
calls = [0]
inner = kernels.objective

def counted(*args):
    calls[0] += 1
    return inner(*args)

kernels.objective = counted
rows = []
for ref, alg, kw in (("tsp:8:1", "GB", {"max_seasons": 3}), ("cvrp:8:2", "GB", {"max_seasons": 3}),
                     ("tsp:8:1", "GA1", {"max_generations": 5}),
                     ("cvrp:8:2", "DGA2", {"max_generations": 5}),
                     ("nqp:6", "EA", {"max_generations": 5}), ("tsp:8:1", "ESA", {"max_sweeps": 5})):
    calls[0] = 0
    rec = run_algorithm(alg, resolve_instance(ref), 0, **kw)
    rows.append([ref, alg, calls[0], rec.total_evals])
print(json.dumps(rows))
"""

CASES = [
    ("tsp:7:1", "GB", {"max_seasons": 3}),
    ("nqp:6", "GB", {"max_seasons": 3}),
    ("cvrp:7:2", "GB", {"max_seasons": 2}),
    ("vrpb:cvrp:7:2", "GA1", {"max_generations": 5}),
    ("matspspd:br17:4", "DGA2", {"max_generations": 3}),
    ("tsp:7:1", "ESA", {"max_sweeps": 5}),
    ("acvrp:Osaba_50_1_1", "EA", {"max_generations": 2, "pop_size": 6}),
]


def _run(code, arg, disable):
    env = dict(os.environ)
    env.pop("GOLDENBALL_DISABLE_NUMBA", None)
    if disable:
        env["GOLDENBALL_DISABLE_NUMBA"] = "1"
    res = subprocess.run([sys.executable, "-c", code, arg], env=env, capture_output=True,
                         text=True, timeout=900)
    assert res.returncode == 0, res.stderr
    return json.loads(res.stdout.strip().splitlines()[-1])


def test_fallback_matches_compiled_path():
    pytest.importorskip("numba")
    arg = json.dumps(CASES)
    fast, slow = _run(WORKER, arg, False), _run(WORKER, arg, True)
    assert fast["numba"] and not slow["numba"]
    assert fast["runs"] == slow["runs"]


def test_evaluation_counter_is_exact():
    for ref, alg, calls, counted in _run(COUNTING, "", True):
        assert calls == counted, (ref, alg)
