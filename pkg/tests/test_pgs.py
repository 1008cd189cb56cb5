import numpy as np
import pytest

from proxcontact import (
    ContactProblem,
    SolverSettings,
    SolverStatus,
    check_ncp,
    pgs_settings,
    solve,
    solve_pgs,
)

from oracles import single_contact_solve


def unit_problem(g, mu=0.5):
    return ContactProblem(G=np.eye(3), g=np.asarray(g, dtype=float), mu=[mu])


def test_default_settings_cap():
    assert pgs_settings().max_iter == 20000
    assert pgs_settings(eps_abs=1e-9).eps_abs == 1e-9


def test_single_contact_normal_push():
    p = unit_problem([0.0, 0.0, -1.0])
    res = solve_pgs(p)
    assert res.converged
    np.testing.assert_allclose(res.lam, [0.0, 0.0, 1.0], atol=1e-6)
    assert res.cholesky_updates == 0


def test_empty_problem():
    p = ContactProblem(G=np.zeros((0, 0)), g=np.zeros(0), mu=np.zeros(0))
    res = solve_pgs(p)
    assert res.converged and res.iterations == 0


def test_omega_validation():
    p = unit_problem([0.0, 0.0, -1.0])
    for omega in (0.0, 2.0, -1.0):
        with pytest.raises(ValueError):
            solve_pgs(p, omega=omega)


def test_over_relaxation_still_converges():
    p = unit_problem([-0.4, 0.3, -1.0])
    for omega in (0.5, 1.0, 1.5):
        res = solve_pgs(p, pgs_settings(eps_abs=1e-9), omega=omega)
        assert res.converged
        assert check_ncp(p, res.lam).max_violation <= 1e-8


def test_oracle_bound_on_convergence():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n_c = int(rng.integers(1, 4))
        A = rng.standard_normal((3 * n_c, 3 * n_c))
        G = A @ A.T + 2.0 * np.eye(3 * n_c)  # diagonally dominant enough
        p = ContactProblem(G=G, g=rng.standard_normal(3 * n_c),
                           mu=rng.uniform(0.3, 1.0, n_c))
        eps = 1e-8
        res = solve_pgs(p, pgs_settings(eps_abs=eps))
        if res.converged:
            assert check_ncp(p, res.lam).max_violation <= 10 * eps


def test_agrees_with_admm_and_oracle_single_contact():
    rng = np.random.default_rng(1)
    for _ in range(20):
        A = rng.standard_normal((3, 3))
        G = A @ A.T + 0.5 * np.eye(3)
        g = rng.standard_normal(3)
        mu = float(rng.uniform(0.3, 1.2))
        p = ContactProblem(G=G, g=g, mu=[mu])
        ra = solve(p, SolverSettings(eps_abs=1e-10))
        rp = solve_pgs(p, pgs_settings(eps_abs=1e-10))
        assert ra.converged and rp.converged
        np.testing.assert_allclose(ra.lam, rp.lam, atol=1e-4)
        oracle = single_contact_solve(G, g, mu)
        np.testing.assert_allclose(rp.lam, oracle, atol=1e-4)


def test_stalls_on_ill_conditioned_stack():
    # two stacked masses with ratio 1e4: strong normal coupling defeats the
    # per-contact sweep at tight tolerance while the joint solver converges
    m1, m2 = 1.0, 1e4
    J = np.array([
        [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, -1.0, 0.0, 0.0, 1.0],
    ])
    M_inv = np.diag([1.0 / m1] * 3 + [1.0 / m2] * 3)
    G = J @ M_inv @ J.T
    dt, grav = 1e-3, 9.81
    g = np.array([0.01, 0.0, -grav * dt, 0.005, 0.0, 0.0])
    p = ContactProblem(G=G, g=g, mu=[0.5, 0.5])

    eps = 1e-9
    res_admm = solve(p, SolverSettings(eps_abs=eps, max_iter=5000))
    res_pgs = solve_pgs(p, pgs_settings(eps_abs=eps))
    assert res_admm.converged
    assert res_pgs.status is SolverStatus.MAX_ITER
    assert res_pgs.iterations >= 10 * res_admm.iterations


def test_convex_mode_matches_admm():
    # with the velocity shift disabled both solvers land on the unique
    # convex solution, which genuinely violates exact Signorini here
    p = unit_problem([-1.0, 0.0, -0.5])
    rp = solve_pgs(p, pgs_settings(eps_abs=1e-11, de_saxce=False))
    ra = solve(p, SolverSettings(eps_abs=1e-11, de_saxce=False))
    assert rp.converged and ra.converged
    np.testing.assert_allclose(rp.lam, ra.lam, atol=1e-8)
    assert check_ncp(p, rp.lam, de_saxce=False).max_violation <= 1e-10
    assert check_ncp(p, rp.lam).max_violation > 1e-3


def test_numerical_failure_on_nan_warm_start():
    p = unit_problem([0.0, 0.0, -1.0])
    res = solve_pgs(p, pgs_settings(warm_start_policy="provided"),
                    warm_start=[np.nan, 0.0, 0.0])
    assert res.status is SolverStatus.NUMERICAL_FAILURE


def test_trace_schema():
    p = unit_problem([-0.2, 0.1, -1.0])
    res = solve_pgs(p, pgs_settings(record_trace=True, eps_abs=1e-9))
    assert res.trace is not None
    assert res.trace.shape == (res.iterations, 5)
    assert np.all(res.trace[:, 4] == 0.0)  # no penalty parameter for PGS
