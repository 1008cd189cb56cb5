import numpy as np
import pytest

from proxcontact import (
    FrictionCone,
    desaxce,
    dual_cone_contains,
    project_cone_product,
    project_soc,
    project_soc_diag_metric,
    soc_distance,
)

from oracles import grid_min_distance, pgd_diag_metric, soc_project_batch


class TestProjectSoc:
    def test_inside_unchanged(self):
        x = np.array([0.1, 0.0, 1.0])
        np.testing.assert_array_equal(project_soc(x, 0.5), x)

    def test_polar_case(self):
        # mu*||x_T|| = 0.5 <= 3 = -x_N: apex
        np.testing.assert_array_equal(project_soc([1.0, 0.0, -3.0], 0.5), np.zeros(3))
        # cross-check against a dense grid search over the cone
        assert grid_min_distance([1.0, 0.0, -3.0], 0.5) >= np.linalg.norm([1.0, 0.0, -3.0]) - 0.05

    def test_boundary_case(self):
        y = project_soc([1.0, 0.0, 0.1], 0.5)
        np.testing.assert_allclose(y, [0.24, 0.0, 0.48], atol=1e-15)
        # grid-search oracle to coarse accuracy
        d_grid = grid_min_distance([1.0, 0.0, 0.1], 0.5)
        assert abs(np.linalg.norm(y - [1.0, 0.0, 0.1]) - d_grid) < 2e-3

    def test_apex_tie_break(self):
        # zero tangential part with negative normal projects to the apex
        np.testing.assert_array_equal(project_soc([0.0, 0.0, -1.0], 0.7), np.zeros(3))

    def test_origin(self):
        np.testing.assert_array_equal(project_soc(np.zeros(3), 1.0), np.zeros(3))

    def test_idempotence(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            x = rng.standard_normal(3)
            mu = rng.uniform(0.1, 2.0)
            y = project_soc(x, mu)
            np.testing.assert_allclose(project_soc(y, mu), y, atol=1e-14)

    def test_moreau_decomposition(self):
        # x = P_K(x) + P_{K_polar}(x) with orthogonal parts,
        # and K_polar = -K_{1/mu}
        rng = np.random.default_rng(1)
        for _ in range(1000):
            x = rng.standard_normal(3)
            mu = rng.uniform(0.1, 2.0)
            p = project_soc(x, mu)
            q = -project_soc(-x, 1.0 / mu)
            np.testing.assert_allclose(p + q, x, atol=1e-12)
            assert abs(float(p @ q)) < 1e-12

    def test_nonexpansive(self):
        rng = np.random.default_rng(2)
        for _ in range(500):
            x = rng.standard_normal(3)
            y = rng.standard_normal(3)
            mu = rng.uniform(0.1, 2.0)
            dp = np.linalg.norm(project_soc(x, mu) - project_soc(y, mu))
            assert dp <= np.linalg.norm(x - y) * (1.0 + 1e-12) + 1e-15

    def test_matches_batch_oracle(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((500, 3))
        mus = rng.uniform(0.1, 2.0, 500)
        expected = soc_project_batch(X, mus)
        for i in range(500):
            np.testing.assert_allclose(project_soc(X[i], mus[i]), expected[i], atol=1e-15)


class TestProjectConeProduct:
    def test_both_inside(self):
        x = np.array([0.1, 0.0, 1.0, 0.0, 0.05, 0.5])
        np.testing.assert_array_equal(project_cone_product(x, [0.5, 0.5]), x)

    def test_mixed_blocks(self):
        x = np.array([1.0, 0.0, -3.0, 0.1, 0.0, 1.0])
        out = project_cone_product(x, [0.5, 0.5])
        np.testing.assert_array_equal(out[:3], np.zeros(3))
        np.testing.assert_array_equal(out[3:], x[3:])

    def test_single_block_consistency(self):
        x = np.array([1.0, 0.2, 0.1])
        np.testing.assert_array_equal(project_cone_product(x, [0.5]), project_soc(x, 0.5))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            project_cone_product(np.zeros(4), [0.5])


class TestDiagMetric:
    def test_identity_metric_bitwise(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            x = rng.standard_normal(3)
            mu = rng.uniform(0.1, 2.0)
            a = project_soc_diag_metric(x, np.ones(3), mu)
            b = project_soc(x, mu)
            assert np.array_equal(a, b)

    def test_feasible_point_fixed(self):
        x = np.array([0.1, 0.1, 1.0])
        for d in ([1.0, 1.0, 1.0], [4.0, 4.0, 1.0], [0.5, 0.5, 3.0]):
            np.testing.assert_allclose(project_soc_diag_metric(x, d, 0.5), x, atol=1e-15)

    def test_hand_computed_case(self):
        # d=(4,4,1), mu=1, x=(1,0,0): scaled coefficient 2, inner projection
        # of (2,0,0) is (1.6,0,0.8), unscaling gives (0.8,0,0.8).  KKT check:
        # D(y-x) = (-0.8,0,0.8) is normal to the cone surface at y.
        y = project_soc_diag_metric([1.0, 0.0, 0.0], [4.0, 4.0, 1.0], 1.0)
        np.testing.assert_allclose(y, [0.8, 0.0, 0.8], atol=1e-15)
        np.testing.assert_allclose(pgd_diag_metric([1.0, 0.0, 0.0], [4.0, 4.0, 1.0], 1.0),
                                   y, atol=1e-8)

    def test_against_pgd_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            x = rng.standard_normal(3)
            dt = rng.uniform(0.25, 4.0)
            dn = rng.uniform(0.25, 4.0)
            mu = rng.uniform(0.2, 1.5)
            got = project_soc_diag_metric(x, [dt, dt, dn], mu)
            want = pgd_diag_metric(x, np.array([dt, dt, dn]), mu)
            np.testing.assert_allclose(got, want, atol=1e-8)

    def test_anisotropic_tangentials_rejected(self):
        with pytest.raises(ValueError):
            project_soc_diag_metric([1.0, 0.0, 0.0], [1.0, 2.0, 1.0], 0.5)

    def test_nonpositive_metric_rejected(self):
        with pytest.raises(ValueError):
            project_soc_diag_metric([1.0, 0.0, 0.0], [1.0, 1.0, 0.0], 0.5)


class TestDesaxce:
    def test_no_tangential_velocity(self):
        np.testing.assert_array_equal(desaxce([0.0, 0.0, 5.0], [0.7]), np.zeros(3))

    def test_shift_magnitude(self):
        np.testing.assert_allclose(desaxce([3.0, 4.0, 1.0], [0.7]), [0.0, 0.0, 3.5])

    def test_ignores_normal_sign(self):
        np.testing.assert_allclose(desaxce([-3.0, -4.0, -9.0], [0.7]), [0.0, 0.0, 3.5])

    def test_blockwise(self):
        out = desaxce([3.0, 4.0, 1.0, 0.0, 0.0, -2.0], [0.7, 1.0])
        np.testing.assert_allclose(out, [0.0, 0.0, 3.5, 0.0, 0.0, 0.0])

    def test_dual_membership_property(self):
        # sigma with nonnegative normal: sigma + shift lies in the dual cone
        rng = np.random.default_rng(6)
        for _ in range(500):
            sigma = rng.standard_normal(3)
            sigma[2] = abs(sigma[2])
            mu = rng.uniform(0.1, 2.0)
            w = sigma + desaxce(sigma, [mu])
            assert dual_cone_contains(w, mu, tol=1e-12)


class TestDualCone:
    def test_normal_ray(self):
        for mu in (0.1, 0.5, 2.0):
            assert dual_cone_contains([0.0, 0.0, 1.0], mu, tol=0.0)

    def test_inside(self):
        assert dual_cone_contains([1.0, 0.0, 1.0], 0.5, tol=0.0)

    def test_outside(self):
        assert not dual_cone_contains([1.0, 0.0, 0.1], 2.0, tol=0.0)


class TestFrictionCone:
    def test_membership(self):
        cone = FrictionCone(0.5)
        assert cone.contains([0.1, 0.0, 1.0])
        assert not cone.contains([1.0, 0.0, 1.0])

    def test_dual(self):
        assert FrictionCone(0.5).dual().mu == 2.0

    def test_invalid_mu(self):
        with pytest.raises(ValueError):
            FrictionCone(0.0)
        with pytest.raises(ValueError):
            FrictionCone(np.inf)


def test_soc_distance_zero_inside():
    assert soc_distance([0.1, 0.0, 1.0], 0.5) == 0.0


def test_soc_distance_matches_grid():
    x = [1.0, 0.3, -0.2]
    assert abs(soc_distance(x, 0.8) - grid_min_distance(x, 0.8)) < 2e-3
