"""Parity checks between the compiled kernels and the pure-Python fallback."""

import numpy as np
import pytest

import proxcontact
from proxcontact import (
    ContactProblem,
    SolverSettings,
    pgs_settings,
    solve,
    solve_pgs,
    use_backend,
)

needs_compiled = pytest.mark.skipif(not proxcontact.HAVE_COMPILED,
                                    reason="compiled kernels not built")


def random_problem(rng, n_c):
    A = rng.standard_normal((3 * n_c, 3 * n_c))
    G = A @ A.T + 0.3 * np.eye(3 * n_c)
    R = np.zeros(3 * n_c)
    R[2::3] = rng.uniform(0.0, 1e-3, n_c)
    return ContactProblem(G=G, g=rng.standard_normal(3 * n_c),
                          mu=rng.uniform(0.3, 1.2, n_c), R_diag=R)


def test_backend_selection_api():
    assert proxcontact.active_backend() in ("compiled", "python")
    with use_backend("python"):
        assert proxcontact.active_backend() == "python"
    with pytest.raises(ValueError):
        with use_backend("fortran"):
            pass


@needs_compiled
def test_admm_backends_agree():
    rng = np.random.default_rng(0)
    for trial in range(10):
        p = random_problem(rng, int(rng.integers(1, 6)))
        st = SolverSettings(eps_abs=1e-10, record_trace=True)
        with use_backend("compiled"):
            rc = solve(p, st)
        with use_backend("python"):
            rp = solve(p, st)
        assert rc.status == rp.status
        assert rc.iterations == rp.iterations
        assert rc.cholesky_updates == rp.cholesky_updates
        np.testing.assert_allclose(rc.lam, rp.lam, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(rc.trace, rp.trace, rtol=1e-8, atol=1e-13)


@needs_compiled
def test_pgs_backends_agree():
    rng = np.random.default_rng(1)
    for trial in range(10):
        p = random_problem(rng, int(rng.integers(1, 5)))
        st = pgs_settings(eps_abs=1e-9, max_iter=5000)
        with use_backend("compiled"):
            rc = solve_pgs(p, st)
        with use_backend("python"):
            rp = solve_pgs(p, st)
        assert rc.status == rp.status
        assert rc.iterations == rp.iterations
        np.testing.assert_allclose(rc.lam, rp.lam, rtol=1e-9, atol=1e-12)


@needs_compiled
def test_warm_start_parity():
    rng = np.random.default_rng(2)
    p = random_problem(rng, 3)
    first = solve(p, SolverSettings(eps_abs=1e-11))
    st = SolverSettings(eps_abs=1e-9, warm_start_policy="provided")
    with use_backend("compiled"):
        rc = solve(p, st, warm_start=first.lam)
    with use_backend("python"):
        rp = solve(p, st, warm_start=first.lam)
    assert rc.iterations == rp.iterations == 1
    np.testing.assert_allclose(rc.lam, rp.lam, rtol=1e-12)


@needs_compiled
def test_linear_strategy_parity():
    from proxcontact.admm import Linear

    rng = np.random.default_rng(3)
    p = random_problem(rng, 4)
    st = SolverSettings(eps_abs=1e-9, strategy=Linear(2.0, 2.0), record_trace=True)
    with use_backend("compiled"):
        rc = solve(p, st)
    with use_backend("python"):
        rp = solve(p, st)
    assert rc.cholesky_updates == rp.cholesky_updates
    np.testing.assert_allclose(rc.trace[:, 4], rp.trace[:, 4], rtol=1e-14)


@needs_compiled
@pytest.mark.filterwarnings("ignore:invalid value encountered")
def test_failure_parity():
    p = ContactProblem(G=np.eye(3), g=[0.0, 0.0, -1.0], mu=[0.5])
    st = SolverSettings(warm_start_policy="provided")
    for backend in ("compiled", "python"):
        with use_backend(backend):
            res = solve(p, st, warm_start=[np.inf, 0.0, 0.0])
            assert res.status.value == "numerical_failure"
            assert res.fail_iteration == 1
