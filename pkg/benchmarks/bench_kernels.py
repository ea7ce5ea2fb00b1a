"""Benchmark the compiled solver kernel against the numpy reference.

Run from the repository root:

    python benchmarks/bench_kernels.py [--problems 500] [--repeats 5]
"""

import argparse
import time

import numpy as np

from lightpos._kernels import _ref

try:
    from lightpos._kernels import _core
except ImportError:
    _core = None


def make_problems(n, seed=0):
    rng = np.random.default_rng(seed)
    problems = []
    while len(problems) < n:
        point = np.array([rng.uniform(-2, 2), rng.uniform(-2, 2),
                          rng.uniform(0.5, 4.0)])
        planes = rng.normal(size=(3, 3))
        planes /= np.linalg.norm(planes, axis=1)[:, None]
        dots = planes @ point
        if abs(np.linalg.det(planes)) < 0.05 or np.min(np.abs(dots)) < 0.05:
            continue
        planes = np.where(dots[:, None] > 0, planes, -planes)
        k = rng.uniform(1, 50)
        gamma = rng.uniform(0.5, 2.5)
        d = np.linalg.norm(point)
        s = k * (planes @ point) * (point[2] / d) ** gamma / d**3
        problems.append((np.ascontiguousarray(planes), s, k,
                         np.array([gamma])))
    return problems


def run(solver, problems):
    start = time.perf_counter()
    converged = 0
    for planes, s, k, coeffs in problems:
        out = solver(planes, s, k, 0, coeffs, 0.0, 0.0, 1.0, 400)
        converged += out[4] == 0
    return time.perf_counter() - start, converged


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--problems", type=int, default=500)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    problems = make_problems(args.problems)
    backends = [("python", _ref.solve_single)]
    if _core is not None:
        backends.append(("cython", _core.solve_single))
    else:
        print("compiled kernel not available; benchmarking reference only")

    results = {}
    for name, solver in backends:
        run(solver, problems[: min(50, len(problems))])  # warm up
        best = min(run(solver, problems)[0] for _ in range(args.repeats))
        _, converged = run(solver, problems)
        results[name] = best
        per = best / len(problems) * 1e6
        print(f"{name:>7}: {best:.4f}s total, {per:.1f} us/solve, "
              f"{converged}/{len(problems)} converged")
    if len(results) == 2:
        print(f"speedup: {results['python'] / results['cython']:.1f}x")


if __name__ == "__main__":
    main()
