"""Compare the compiled and pure-Python simulation kernels on the Case 1 preset.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N] [--step DT]``.
Both backends integrate the same closed loop; the script reports the best
wall time of each and the largest state difference between them.
"""

from __future__ import annotations

import argparse
import json
import time
from importlib import resources

import numpy as np

from ncts.model import model_from_dict
from ncts.simulator import Gains, Scenario, run

# published Case 1 gains; any stabilizing set would do for timing
GAINS = Gains(K1=np.array([[-0.2030e-3, 0.4837e-3]]),
              K2=np.array([[-3.8497, -2.4732]]),
              W=np.array([[3.9551, 0.2531], [0.2531, 5.0434]]))


def _best(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--step", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    doc = json.loads(resources.files("ncts").joinpath("data", "case1.json").read_text())
    model = model_from_dict(doc["model"])
    sc = Scenario.from_dict(doc["scenario"], seed=args.seed)
    sc.step = args.step

    results = {}
    for backend in ("cython", "python"):
        try:
            wall, trace = _best(lambda: run(model, GAINS, sc, backend=backend), args.repeat)
        except ImportError:
            print(f"{backend:7s} unavailable (extension not built)")
            continue
        results[backend] = trace
        print(f"{backend:7s} {wall * 1e3:9.1f} ms  ({trace.n_rows} rows, step {args.step:g})")
    if len(results) == 2:
        a, b = results["cython"], results["python"]
        diff = max(np.max(np.abs(a.x1 - b.x1)), np.max(np.abs(a.x2 - b.x2)))
        print(f"max |cython - python| over x1, x2: {diff:.2e}")


if __name__ == "__main__":
    main()
