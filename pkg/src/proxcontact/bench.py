"""Benchmark harness: performance profiles, penalty-rule ablations, reports.

Tim's are wall-clock around the solve call only; problems that stop at the
iteration cap count as unsolved in the profiles but still enter the summary
statistics.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .admm import Linear, SolverSettings, SolverStatus, Spectral, solve
from .pgs import solve_pgs
from .problem import ContactProblem, problem_from_dict, problem_to_dict
from .sim import assemble_step_problem, detect_contacts, make_stack_scene

__all__ = [
    "BenchReport",
    "generate_stack_suite",
    "performance_profile",
    "report_from_dict",
    "report_to_dict",
    "run_ablation",
]

PROFILE_TAU_MIN = 1.0
PROFILE_TAU_MAX = 100.0
PROFILE_POINTS = 50


def performance_profile(times, solved, tau_grid=None):
    """Cumulative distribution of per-problem time ratios to the best solver.

    ``times`` is a solvers-by-problems matrix and ``solved`` the matching
    boolean matrix; unsolved entries get an infinite ratio.  Returns the tau
    grid and one nondecreasing curve per solver.
    """
    times = np.atleast_2d(np.asarray(times, dtype=float))
    solved = np.atleast_2d(np.asarray(solved, dtype=bool))
    if times.shape != solved.shape:
        raise ValueError("times and solved must have matching shapes")
    n_solvers, n_problems = times.shape
    if tau_grid is None:
        tau_grid = np.geomspace(PROFILE_TAU_MIN, PROFILE_TAU_MAX, PROFILE_POINTS)
    else:
        tau_grid = np.asarray(tau_grid, dtype=float)

    curves = np.zeros((n_solvers, tau_grid.shape[0]))
    if n_problems == 0:
        return tau_grid, curves

    eff = np.where(solved, times, np.inf)
    best = eff.min(axis=0)
    ratios = np.full_like(eff, np.inf)
    finite_best = best < np.inf
    ratios[:, finite_best] = eff[:, finite_best] / best[finite_best]
    for s in range(n_solvers):
        curves[s] = (ratios[s][None, :] <= tau_grid[:, None]).mean(axis=1)
    return tau_grid, curves


@dataclass
class BenchReport:
    """Per-problem records, profile curves and per-solver summary statistics."""

    per_problem: list[dict] = field(default_factory=list)
    profile_curves: dict[str, list[tuple[float, float]]] = field(default_factory=dict)
    summary: dict[str, dict[str, float]] = field(default_factory=dict)


def _solve_timed(problem: ContactProblem, settings: SolverSettings,
                 solver: str = "admm", omega: float = 1.0):
    start = time.perf_counter()
    if solver == "admm":
        result = solve(problem, settings)
    else:
        result = solve_pgs(problem, settings, omega=omega)
    elapsed_ms = (time.perf_counter() - start) * 1e3
    return result, elapsed_ms


def _record(problem_id: str, label: str, result, elapsed_ms: float) -> dict:
    rp, rd, rc = result.final_residuals if result.final_residuals else (np.nan,) * 3
    return {
        "problem": problem_id,
        "solver": label,
        "status": result.status.value,
        "iterations": int(result.iterations),
        "time_ms": float(elapsed_ms),
        "cholesky_updates": int(result.cholesky_updates),
        "final_residuals": {"r_prim": float(rp), "r_dual": float(rd), "r_comp": float(rc)},
    }


def run_ablation(problems, strategies, solver: str = "admm") -> BenchReport:
    """Solve every problem under every strategy and tabulate the costs.

    ``problems`` is a list of (id, ContactProblem); ``strategies`` a list of
    (label, SolverSettings).  NumericalFailure runs are excluded from the
    summary; MaxIter runs count as unsolved in the profile curves.
    """
    report = BenchReport()
    labels = [label for label, _ in strategies]
    n_p = len(problems)
    times = np.full((len(labels), n_p), np.inf)
    solved = np.zeros((len(labels), n_p), dtype=bool)

    for si, (label, settings) in enumerate(strategies):
        for pi, (pid, problem) in enumerate(problems):
            result, elapsed = _solve_timed(problem, settings, solver=solver)
            report.per_problem.append(_record(pid, label, result, elapsed))
            times[si, pi] = elapsed
            solved[si, pi] = result.status is SolverStatus.CONVERGED

    tau_grid, curves = performance_profile(times, solved)
    for si, label in enumerate(labels):
        report.profile_curves[label] = [(float(t), float(v))
                                        for t, v in zip(tau_grid, curves[si])]

    for label in labels:
        rows = [r for r in report.per_problem
                if r["solver"] == label and r["status"] != SolverStatus.NUMERICAL_FAILURE.value]
        chol = np.array([r["cholesky_updates"] for r in rows], dtype=float)
        tms = np.array([r["time_ms"] for r in rows], dtype=float)
        report.summary[label] = {
            "cholesky_updates_mean": float(chol.mean()) if chol.size else float("nan"),
            "cholesky_updates_std": float(chol.std()) if chol.size else float("nan"),
            "time_ms_mean": float(tms.mean()) if tms.size else float("nan"),
            "time_ms_std": float(tms.std()) if tms.size else float("nan"),
        }
    return report


def default_strategies(eps_abs: float = 1e-6, max_iter: int = 3000) -> list[tuple[str, SolverSettings]]:
    """The headline ablation pair: linear tau=2 versus spectral p=0.05."""
    return [
        ("linear_tau2", SolverSettings(eps_abs=eps_abs, max_iter=max_iter,
                                       strategy=Linear(tau_inc=2.0, tau_dec=2.0))),
        ("spectral_p05", SolverSettings(eps_abs=eps_abs, max_iter=max_iter,
                                        strategy=Spectral(p_inc=0.05, p_dec=0.05))),
    ]


BASE_MASSES = (0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)


def generate_stack_suite(seed: int = 0) -> list[tuple[str, ContactProblem]]:
    """Twenty stacked-box step problems spanning mass ratios 1e0 to 1e4.

    Each problem is the first-step NCP of a resting stack with small random
    tangential velocities, so friction is active and the Delassus spectrum
    spans the mass ratio.  Base masses cycle over six decades, which moves
    the natural penalty scale across problems and exposes the difference
    between a fixed and a spectrum-informed initial rho.
    """
    rng = np.random.default_rng(seed)
    suite = []
    i = 0
    for layers in (3, 4, 5, 6):
        for ratio in (1.0, 1e1, 1e2, 1e3, 1e4):
            scene = make_stack_scene(layers, ratio)
            base = BASE_MASSES[i % len(BASE_MASSES)]
            i += 1
            for body in scene.bodies:
                body.mass *= base
                body.velocity[0] = 3e-4 * rng.standard_normal()
                body.velocity[1] = 3e-4 * rng.standard_normal()
            contacts = detect_contacts(scene)
            asm = assemble_step_problem(scene, contacts, dt=1e-3)
            suite.append((f"stack_l{layers}_r{ratio:.0e}_m{base:g}", asm.problem))
    return suite


def report_to_dict(report: BenchReport) -> dict:
    return {
        "per_problem": report.per_problem,
        "profile_curves": {label: [[float(t), float(v)] for t, v in curve]
                           for label, curve in report.profile_curves.items()},
        "summary": report.summary,
    }


def report_from_dict(doc: dict) -> BenchReport:
    return BenchReport(
        per_problem=list(doc["per_problem"]),
        profile_curves={label: [(float(t), float(v)) for t, v in curve]
                        for label, curve in doc["profile_curves"].items()},
        summary={label: dict(stats) for label, stats in doc["summary"].items()},
    )


def save_report(report: BenchReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=2)
        fh.write("\n")


def load_report(path) -> BenchReport:
    with open(path, "r", encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))


def save_suite(suite, directory) -> None:
    """Write a problem suite as one JSON file per problem."""
    import os

    os.makedirs(directory, exist_ok=True)
    for pid, problem in suite:
        path = os.path.join(directory, f"{pid}.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(problem_to_dict(problem), fh)
            fh.write("\n")


def load_suite(directory) -> list[tuple[str, ContactProblem]]:
    import os

    suite = []
    for name in sorted(os.listdir(directory)):
        if not name.endswith(".json"):
            continue
        with open(os.path.join(directory, name), "r", encoding="utf-8") as fh:
            problem, _ = problem_from_dict(json.load(fh))
        suite.append((name[:-5], problem))
    return suite
