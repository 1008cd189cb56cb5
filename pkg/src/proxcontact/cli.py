"""Command-line front end: solve, verify, simulate, bench and id subcommands."""

from __future__ import annotations

import json
import multiprocessing
import sys

import click
import numpy as np

from ._backend import active_backend
from .admm import Linear, SolverSettings, SolverStatus, Spectral, solve
from .bench import (
    BenchReport,
    default_strategies,
    load_suite,
    performance_profile,
    run_ablation,
    save_report,
)
from .inverse import IdStatus, load_id_problem, recover_torque, solve_id
from .pgs import PGS_MAX_ITER_DEFAULT, solve_pgs
from .problem import check_ncp, load_problem
from .sim import Simulator, load_scene, write_trajectory_csv

EXIT_OK = 0
EXIT_MAX_ITER = 2
EXIT_NUMERICAL = 3
EXIT_BAD_INPUT = 4

_STATUS_EXIT = {
    SolverStatus.CONVERGED: EXIT_OK,
    SolverStatus.MAX_ITER: EXIT_MAX_ITER,
    SolverStatus.NUMERICAL_FAILURE: EXIT_NUMERICAL,
}


def _load_or_exit(loader, path):
    try:
        return loader(path)
    except json.JSONDecodeError as err:
        click.echo(f"error: {path}: line {err.lineno} column {err.colno}: {err.msg}", err=True)
        sys.exit(EXIT_BAD_INPUT)
    except (KeyError, ValueError, OSError) as err:
        click.echo(f"error: {path}: {err}", err=True)
        sys.exit(EXIT_BAD_INPUT)


def _write_trace(path, trace) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iter,r_prim,r_dual,r_comp,rho\n")
        for row in trace:
            fh.write(f"{int(row[0])},{float(row[1])!r},{float(row[2])!r},"
                     f"{float(row[3])!r},{float(row[4])!r}\n")


@click.group()
def main():
    """Frictional-contact NCP solver toolkit."""


@main.command(name="solve")
@click.argument("problem_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--solver", type=click.Choice(["admm", "pgs"]), default="admm", show_default=True)
@click.option("--eps", type=float, default=1e-6, show_default=True, help="Absolute tolerance.")
@click.option("--strategy", type=click.Choice(["linear", "spectral"]), default="spectral",
              show_default=True, help="Penalty update rule (ADMM only).")
@click.option("--max-iter", type=int, default=None, help="Iteration cap (default 1000 ADMM, 20000 PGS).")
@click.option("--tau", type=float, default=2.0, show_default=True, help="Linear increment/decrement factor.")
@click.option("--p-step", type=float, default=0.05, show_default=True, help="Spectral exponent step.")
@click.option("--alpha", type=float, default=10.0, show_default=True, help="Residual-ratio tube diameter.")
@click.option("--rho-init", type=float, default=None, help="Initial penalty (default: strategy rule).")
@click.option("--omega", type=float, default=1.0, show_default=True, help="PGS over-relaxation factor.")
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), default=None,
              help="Write per-iteration residual CSV.")
def solve_cmd(problem_file, solver, eps, strategy, max_iter, tau, p_step, alpha,
              rho_init, omega, trace_path):
    """Solve a contact problem file and print the outcome."""
    problem, warm = _load_or_exit(load_problem, problem_file)
    if max_iter is None:
        max_iter = PGS_MAX_ITER_DEFAULT if solver == "pgs" else 1000
    strat = Spectral(p_inc=p_step, p_dec=p_step) if strategy == "spectral" \
        else Linear(tau_inc=tau, tau_dec=tau)
    settings = SolverSettings(
        eps_abs=eps, max_iter=max_iter, strategy=strat, alpha=alpha,
        rho_init=rho_init, record_trace=trace_path is not None,
        warm_start_policy="provided" if warm is not None else "zero",
    )
    if solver == "admm":
        result = solve(problem, settings, warm_start=warm)
    else:
        result = solve_pgs(problem, settings, omega=omega, warm_start=warm)

    report = check_ncp(problem, result.lam)
    click.echo(f"backend:          {active_backend()}")
    click.echo(f"status:           {result.status.value}")
    click.echo(f"iterations:       {result.iterations}")
    click.echo(f"cholesky updates: {result.cholesky_updates}")
    if result.final_residuals is not None:
        rp, rd, rc = result.final_residuals
        click.echo(f"residuals:        r_prim={rp:.3e} r_dual={rd:.3e} r_comp={rc:.3e}")
    click.echo(f"ncp violation:    {report.max_violation:.3e}")
    if trace_path and result.trace is not None:
        _write_trace(trace_path, result.trace)
    sys.exit(_STATUS_EXIT[result.status])


def _load_lambda(path):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if isinstance(doc, dict):
        doc = doc["lambda"]
    return np.asarray(doc, dtype=float)


@main.command(name="verify")
@click.argument("problem_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("lambda_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--tol", type=float, default=1e-6, show_default=True)
def verify_cmd(problem_file, lambda_file, tol):
    """Check an impulse vector against a problem's NCP conditions."""
    problem, _ = _load_or_exit(load_problem, problem_file)
    lam = _load_or_exit(_load_lambda, lambda_file)
    try:
        report = check_ncp(problem, lam)
    except ValueError as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(EXIT_BAD_INPUT)
    click.echo("contact  signorini      primal_cone    dual_cone      complementarity")
    for i in range(problem.n_c):
        click.echo(
            f"{i:7d}  {report.signorini_comp[i]:.6e}  "
            f"{report.primal_cone_violation[i]:.6e}  "
            f"{report.dual_cone_violation[i]:.6e}  {report.ncp_comp[i]:.6e}"
        )
    click.echo(f"max violation: {report.max_violation:.6e} (tol {tol:g})")
    sys.exit(EXIT_OK if report.max_violation <= tol else 1)


@main.command(name="simulate")
@click.argument("scene_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--steps", type=int, default=None, help="Override the scene's step count.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Trajectory CSV output path.")
@click.option("--solver", type=click.Choice(["admm", "pgs"]), default=None,
              help="Override the scene's solver choice.")
def simulate_cmd(scene_file, steps, out_path, solver):
    """Run a scene file forward and optionally dump the trajectory."""
    scene, config = _load_or_exit(load_scene, scene_file)
    n_steps = steps if steps is not None else int(config.get("steps", 100))
    solver_name = solver if solver is not None else config.get("solver", "admm")
    settings_kwargs = {}
    if "eps_abs" in config:
        settings_kwargs["eps_abs"] = float(config["eps_abs"])
    if "max_iter" in config:
        settings_kwargs["max_iter"] = int(config["max_iter"])
    settings = SolverSettings(**settings_kwargs) if solver_name == "admm" else None
    if solver_name == "pgs" and settings_kwargs:
        from .pgs import pgs_settings
        settings = pgs_settings(**settings_kwargs)
    sim = Simulator(
        scene, solver=solver_name, settings=settings,
        dt=float(config.get("dt", 1e-3)),
        baumgarte=float(config.get("baumgarte", 0.2)),
        compliance=config.get("compliance"),
    )
    history = []
    for _ in range(n_steps):
        stats = sim.step()
        history.append((sim.scene.copy(), stats))
    statuses = [stats.result.status for _, stats in history]
    n_conv = sum(s is SolverStatus.CONVERGED for s in statuses)
    iters = np.array([stats.result.iterations for _, stats in history], dtype=float)
    click.echo(f"steps:      {n_steps}")
    click.echo(f"converged:  {n_conv}/{n_steps}")
    click.echo(f"iterations: mean {iters.mean():.1f}  max {int(iters.max()) if iters.size else 0}")
    if out_path:
        write_trajectory_csv(out_path, history)
        click.echo(f"trajectory: {out_path}")
    sys.exit(EXIT_OK)


def _parse_strategies(path) -> list[tuple[str, SolverSettings]]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    strategies = []
    for entry in doc:
        kind = entry.get("strategy", "spectral")
        if kind == "linear":
            strat = Linear(tau_inc=float(entry.get("tau_inc", entry.get("tau", 2.0))),
                           tau_dec=float(entry.get("tau_dec", entry.get("tau", 2.0))))
        else:
            p = float(entry.get("p", 0.05))
            strat = Spectral(p_inc=float(entry.get("p_inc", p)),
                             p_dec=float(entry.get("p_dec", p)))
        settings = SolverSettings(
            eps_abs=float(entry.get("eps_abs", 1e-6)),
            max_iter=int(entry.get("max_iter", 1000)),
            alpha=float(entry.get("alpha", 10.0)),
            strategy=strat,
        )
        strategies.append((entry["name"], settings))
    return strategies


def _bench_worker(args):
    from .problem import problem_from_dict

    pid, problem_doc, strategies = args
    problem, _ = problem_from_dict(problem_doc)
    report = run_ablation([(pid, problem)], strategies)
    return report.per_problem


@main.command(name="bench")
@click.argument("problem_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--strategies", "strategies_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON list of strategy configs.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
@click.option("--jobs", type=int, default=None, help="Worker count (default: CPU count).")
def bench_cmd(problem_dir, strategies_path, out_path, jobs):
    """Benchmark the solver strategies over a directory of problem files."""
    suite = _load_or_exit(load_suite, problem_dir)
    strategies = _parse_strategies(strategies_path) if strategies_path else default_strategies()

    if jobs is None:
        jobs = multiprocessing.cpu_count()
    if jobs > 1 and len(suite) > 1:
        from .problem import problem_to_dict

        tasks = [(pid, problem_to_dict(problem), strategies) for pid, problem in suite]
        with multiprocessing.Pool(jobs) as pool:
            chunks = pool.map(_bench_worker, tasks)
        report = BenchReport()
        for chunk in chunks:
            report.per_problem.extend(chunk)
        _rebuild_aggregates(report, [label for label, _ in strategies])
    else:
        report = run_ablation(suite, strategies)

    click.echo(f"problems: {len(suite)}  strategies: {[label for label, _ in strategies]}")
    for label, stats in report.summary.items():
        click.echo(
            f"{label:>16}: cholesky {stats['cholesky_updates_mean']:.2f} "
            f"+/- {stats['cholesky_updates_std']:.2f}, "
            f"time {stats['time_ms_mean']:.3f} +/- {stats['time_ms_std']:.3f} ms"
        )
    if out_path:
        save_report(report, out_path)
        click.echo(f"report: {out_path}")
    sys.exit(EXIT_OK)


def _rebuild_aggregates(report: BenchReport, labels: list[str]) -> None:
    problems = sorted({r["problem"] for r in report.per_problem})
    index = {pid: i for i, pid in enumerate(problems)}
    times = np.full((len(labels), len(problems)), np.inf)
    solved = np.zeros((len(labels), len(problems)), dtype=bool)
    for row in report.per_problem:
        si = labels.index(row["solver"])
        pi = index[row["problem"]]
        times[si, pi] = row["time_ms"]
        solved[si, pi] = row["status"] == SolverStatus.CONVERGED.value
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


@main.command(name="id")
@click.argument("id_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--n-iter", type=int, default=1000, show_default=True)
@click.option("--eps", type=float, default=1e-6, show_default=True)
@click.option("--ccp", is_flag=True, help="Disable the velocity shift (convex mode).")
def id_cmd(id_file, n_iter, eps, ccp):
    """Solve an inverse-dynamics problem file; prints impulses and torque."""
    problem, dynamics = _load_or_exit(load_id_problem, id_file)
    result = solve_id(problem, n_iter=n_iter, eps_abs=eps, de_saxce=not ccp)
    click.echo(f"status:     {result.status.value}")
    click.echo(f"iterations: {result.iterations}")
    for i in range(problem.n_c):
        b = result.lam[3 * i : 3 * i + 3]
        click.echo(f"lambda[{i}]:  [{float(b[0])!r}, {float(b[1])!r}, {float(b[2])!r}]")
    if dynamics and result.status is IdStatus.CONVERGED:
        tau = recover_torque(dynamics["M"], dynamics["b"], dynamics["v"],
                             problem.v_ref, dynamics["dt"], problem.J, result.lam)
        click.echo(f"tau:        {[float(t) for t in tau]}")
    if result.status is IdStatus.CONVERGED:
        sys.exit(EXIT_OK)
    sys.exit(EXIT_MAX_ITER if result.status is IdStatus.MAX_ITER else EXIT_NUMERICAL)


if __name__ == "__main__":
    main()
