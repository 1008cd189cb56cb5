#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Times cold ADMM solves and capped PGS runs over the stacked-box suite under
both backends and prints the per-solver speedup.  Run from the repo root:

    python benchmarks/compare_backends.py [--pgs-cap 2000]
"""

import argparse
import time

import numpy as np

import proxcontact
from proxcontact import SolverSettings, pgs_settings, solve, solve_pgs, use_backend
from proxcontact.bench import generate_stack_suite


def time_solves(backend, problems, admm_settings, pgs_st, repeats):
    admm_times, pgs_times = [], []
    with use_backend(backend):
        for _, problem in problems:
            best = np.inf
            for _ in range(repeats):
                t0 = time.perf_counter()
                solve(problem, admm_settings)
                best = min(best, time.perf_counter() - t0)
            admm_times.append(best)
            best = np.inf
            for _ in range(repeats):
                t0 = time.perf_counter()
                solve_pgs(problem, pgs_st)
                best = min(best, time.perf_counter() - t0)
            pgs_times.append(best)
    return np.array(admm_times), np.array(pgs_times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pgs-cap", type=int, default=2000,
                        help="PGS sweep cap (keeps the python backend affordable)")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if not proxcontact.HAVE_COMPILED:
        raise SystemExit("compiled kernels are not built; run "
                         "`python setup.py build_ext --inplace` first")

    problems = generate_stack_suite()
    admm_settings = SolverSettings(eps_abs=1e-6, max_iter=3000)
    pgs_st = pgs_settings(eps_abs=1e-9, max_iter=args.pgs_cap)

    print(f"{len(problems)} stack problems, ADMM eps 1e-6, "
          f"PGS capped at {args.pgs_cap} sweeps, best of {args.repeats}\n")
    results = {}
    for backend in ("compiled", "python"):
        admm_t, pgs_t = time_solves(backend, problems, admm_settings, pgs_st,
                                    args.repeats)
        results[backend] = (admm_t, pgs_t)
        print(f"{backend:>9}: admm total {admm_t.sum() * 1e3:8.1f} ms "
              f"(median {np.median(admm_t) * 1e3:7.2f} ms)   "
              f"pgs total {pgs_t.sum() * 1e3:8.1f} ms "
              f"(median {np.median(pgs_t) * 1e3:7.2f} ms)")

    admm_speedup = results["python"][0].sum() / results["compiled"][0].sum()
    pgs_speedup = results["python"][1].sum() / results["compiled"][1].sum()
    print(f"\nspeedup (python / compiled): admm {admm_speedup:.1f}x, "
          f"pgs {pgs_speedup:.1f}x")


if __name__ == "__main__":
    main()
