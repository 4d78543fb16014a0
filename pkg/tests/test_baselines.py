"""Reference solvers: direct least squares, gradient descent, Newton."""

import numpy as np
import pytest

from blockpool.baselines import (direct_ls, gradient_descent,
                                 logistic_gradient, logistic_hessian,
                                 logistic_value, newton_logistic,
                                 remap_01_labels, sigmoid)
from blockpool.errors import Divergence, NotPositiveDefinite
from blockpool.model import Objective, partition_rows
from blockpool.spectral import build_Mgd


class TestDirectLs:
    def test_orthonormal_design(self):
        rng = np.random.default_rng(0)
        q, _ = np.linalg.qr(rng.standard_normal((20, 4)))
        y = rng.standard_normal(20)
        assert np.abs(direct_ls(q, y) - q.T @ y).max() <= 1e-12

    def test_consistent_system_recovers_truth(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((30, 5))
        beta = rng.standard_normal(5)
        assert np.abs(direct_ls(X, X @ beta) - beta).max() <= 1e-10

    def test_ridge_shrinks_monotonically(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((30, 5))
        y = rng.standard_normal(30)
        norms = [np.linalg.norm(direct_ls(X, y, alpha)) for alpha in (0.0, 1.0, 100.0, 1e6)]
        assert norms[0] > norms[1] > norms[2] > norms[3]
        assert norms[-1] < 1e-3

    def test_residual_gradient_small(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((25, 4))
        y = rng.standard_normal(25)
        beta = direct_ls(X, y, 0.3)
        grad = (X.T @ X + 0.3 * np.eye(4)) @ beta - X.T @ y
        assert np.abs(grad).max() <= 1e-10

    def test_singular_unregularized(self):
        X = np.zeros((5, 2))
        with pytest.raises(NotPositiveDefinite):
            direct_ls(X, np.zeros(5))


class TestGradientDescent:
    def test_identity_gram_one_step(self):
        rng = np.random.default_rng(4)
        q, _ = np.linalg.qr(rng.standard_normal((20, 3)))
        y = rng.standard_normal(20)
        ds = partition_rows(q, y, 2)
        res = gradient_descent(ds, Objective(), rho=1.0, max_iters=1)
        assert np.abs(res["beta"] - q.T @ y).max() <= 1e-12

    def test_divergence_outside_stable_step(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((30, 3))
        ds = partition_rows(X, rng.standard_normal(30), 2)
        qbar = max(np.linalg.eigvalsh(X.T @ X))
        with pytest.raises(Divergence):
            gradient_descent(ds, Objective(), rho=2.5 / qbar, max_iters=2000)

    def test_contraction_matches_gd_map_radius(self):
        # well-separated spectrum so the per-step ratio settles quickly
        rng = np.random.default_rng(6)
        vals = np.array([0.15, 0.4, 0.7, 0.9])
        top = np.diag(np.sqrt(vals))
        X = np.vstack([top, np.zeros((8, 4))])
        X = X[rng.permutation(12)]
        y = rng.standard_normal(12)
        ds = partition_rows(X, y, 2)
        bstar = direct_ls(X, y)
        rho = 1.0
        res = gradient_descent(ds, Objective(), rho=rho, max_iters=300,
                               beta_star=bstar)
        al = np.array(res["trace"]["al"])
        idx = np.where(al > 1e-12)[0]
        k1 = idx[-1]
        rate = al[k1] / al[k1 - 1]
        want = build_Mgd(X.T @ X, rho).radius
        assert want == pytest.approx(1.0 - rho * vals.min(), abs=1e-12)
        assert rate == pytest.approx(want, abs=1e-3)

    def test_backtracking_descends(self):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((50, 5))
        y = rng.standard_normal(50)
        ds = partition_rows(X, y, 2)
        res = gradient_descent(ds, Objective(), backtracking=True, max_iters=200,
                               tol=1e-10)
        grad = X.T @ (X @ res["beta"] - y)
        assert np.linalg.norm(grad) <= 1e-6

    def test_logistic_gradient_descent(self):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((100, 4))
        y = np.where(rng.random(100) < sigmoid(X @ np.ones(4)), 1.0, -1.0)
        ds = partition_rows(X, y, 2)
        res = gradient_descent(ds, Objective("logistic"), backtracking=True,
                               max_iters=400)
        bstar = newton_logistic(X, y)
        assert np.linalg.norm(res["beta"] - bstar) <= 1e-3


class TestNewtonLogistic:
    def test_symmetric_data_zero_optimum(self):
        rng = np.random.default_rng(9)
        half = rng.standard_normal((25, 3))
        X = np.vstack([half, -half])
        y = np.ones(50)
        assert np.abs(newton_logistic(X, y)).max() <= 1e-10

    def test_one_dimensional_vs_bisection_oracle(self):
        rng = np.random.default_rng(10)
        x = rng.standard_normal(40).reshape(-1, 1)
        y = np.where(rng.random(40) < sigmoid(1.3 * x[:, 0]), 1.0, -1.0)
        alpha = 0.5
        beta = newton_logistic(x, y, alpha=alpha)[0]
        # oracle: bisection on the scalar stationarity condition
        def grad(b):
            return float(logistic_gradient(x, y, np.array([b]), alpha)[0])
        lo, hi = -50.0, 50.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if grad(mid) > 0:
                hi = mid
            else:
                lo = mid
        assert beta == pytest.approx(0.5 * (lo + hi), abs=1e-9)
        assert abs(grad(beta)) <= 1e-10

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        X = rng.standard_normal((30, 4))
        y = np.where(rng.random(30) < 0.5, 1.0, -1.0)
        beta = rng.standard_normal(4)
        g = logistic_gradient(X, y, beta, alpha=0.3)
        h = 1e-6
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            fd = (logistic_value(X, y, beta + e, 0.3)
                  - logistic_value(X, y, beta - e, 0.3)) / (2 * h)
            assert abs(fd - g[j]) <= 1e-5 * max(1.0, abs(g[j]))

    def test_hessian_matches_finite_differences(self):
        rng = np.random.default_rng(12)
        X = rng.standard_normal((30, 3))
        y = np.where(rng.random(30) < 0.5, 1.0, -1.0)
        beta = rng.standard_normal(3)
        H = logistic_hessian(X, y, beta, alpha=0.2)
        h = 1e-6
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd = (logistic_gradient(X, y, beta + e, 0.2)
                  - logistic_gradient(X, y, beta - e, 0.2)) / (2 * h)
            assert np.abs(fd - H[:, j]).max() <= 1e-4 * max(1.0, np.abs(H[:, j]).max())

    def test_label_validation_and_remap(self):
        rng = np.random.default_rng(13)
        X = rng.standard_normal((10, 2))
        with pytest.raises(ValueError):
            newton_logistic(X, np.arange(10.0))
        y01 = (rng.random(10) < 0.5).astype(float)
        assert set(remap_01_labels(y01)) <= {-1.0, 1.0}
        with pytest.raises(ValueError):
            remap_01_labels(np.array([0.0, 2.0]))

    def test_strict_false_returns_partial(self):
        rng = np.random.default_rng(14)
        X = rng.standard_normal((60, 3))
        y = np.where(rng.random(60) < sigmoid(X @ np.ones(3)), 1.0, -1.0)
        beta, trail = newton_logistic(X, y, max_iters=2, return_trace=True,
                                      strict=False)
        assert len(trail) == 3  # start plus two damped steps
