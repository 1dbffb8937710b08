"""Compare the numba kernels with the pure-numpy fallback.

Each measurement runs in a fresh interpreter so the ``GOLDENBALL_DISABLE_NUMBA``
flag takes effect at import.  Both paths must return identical results for
the same seed; the script checks that and reports the speedup.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--instance berlin52]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from goldenball import NUMBA_ENABLED, kernels
from goldenball.core import RngStream, Search
from goldenball.engine import GbConfig, run
from goldenball.instances import load_bundled

name, repeat = sys.argv[1], int(sys.argv[2])
p = load_bundled(name)
args = p.kernel_args()
g = p.prepare(p.random_solution(RngStream(1).gen))
f = float(kernels.fitness(p.code, g, *args))  # warm-up (compiles when numba is on)
s = Search(p, RngStream(2).gen)
s.train(g, f, 0)
out = {"numba": NUMBA_ENABLED}

t = time.perf_counter()
for _ in range(repeat * 2000):
    kernels.fitness(p.code, g, *args)
out["objective_us"] = (time.perf_counter() - t) / (repeat * 2000) * 1e6

t = time.perf_counter()
res = []
for r in range(repeat):
    s = Search(p, RngStream(r).gen)
    g2, f2, _ = s.train(g, f, 0)
    res.append((f2, s.counter.count))
out["train_s"] = (time.perf_counter() - t) / repeat
out["train_result"] = res

t = time.perf_counter()
rec = run(p, GbConfig(max_seasons=1), seed=0)
out["gb_season_s"] = time.perf_counter() - t
out["gb_result"] = [rec.best_f, rec.total_evals]
print(json.dumps(out))
"""


def measure(instance: str, repeat: int, disable: bool) -> dict:
    env = dict(os.environ)
    if disable:
        env["GOLDENBALL_DISABLE_NUMBA"] = "1"
    else:
        env.pop("GOLDENBALL_DISABLE_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", WORKER, instance, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instance", default="oliver30")
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    fast = measure(a.instance, a.repeat, disable=False)
    slow = measure(a.instance, a.repeat, disable=True)
    print(f"instance {a.instance}, numba available: {fast['numba']}")
    print(f"{'metric':<16}{'numba':>14}{'fallback':>14}{'speedup':>10}")
    for key, unit in (("objective_us", "us"), ("train_s", "s"), ("gb_season_s", "s")):
        print(f"{key:<16}{fast[key]:>12.4g}{unit:>2}{slow[key]:>12.4g}{unit:>2}"
              f"{slow[key] / fast[key]:>9.1f}x")
    same = fast["train_result"] == slow["train_result"] and fast["gb_result"] == slow["gb_result"]
    print("results identical:", same)
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
