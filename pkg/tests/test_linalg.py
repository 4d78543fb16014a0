"""Dense linear algebra: factorizations, eigenvalues, condition numbers."""

import numpy as np
import pytest

from blockpool.errors import NoConvergence, NotPositiveDefinite, ZeroMatrix
from blockpool.linalg import (Spectrum, cholesky_factor, cholesky_solve,
                              eigenvalues_general, eigenvalues_symmetric,
                              frobenius_normalize, hessenberg, inverse_spd,
                              spd_condition_number, spectral_radius)


def jacobi_eigenvalues(a, sweeps=100, tol=1e-14):
    """Independent oracle: cyclic Jacobi rotations for symmetric matrices."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    for _ in range(sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off = max(off, abs(a[p, q]))
                if abs(a[p, q]) < tol:
                    continue
                theta = 0.5 * np.arctan2(2 * a[p, q], a[q, q] - a[p, p])
                c, s = np.cos(theta), np.sin(theta)
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
        if off < tol:
            break
    return np.sort(np.diag(a))


def random_spd(rng, n, scale=1.0):
    a = rng.standard_normal((n + 2, n))
    return scale * (a.T @ a) / (n + 2)


class TestCholesky:
    def test_identity_solve(self):
        b = np.arange(6.0).reshape(3, 2)
        assert np.allclose(cholesky_solve(np.eye(3), b), b, atol=0, rtol=0)

    def test_diagonal_solve(self):
        x = cholesky_solve(np.diag([4.0, 9.0]), np.array([[8.0], [27.0]]))
        assert np.allclose(x, [[2.0], [3.0]])

    def test_small_dense_solve(self):
        a = np.array([[2.0, 1.0], [1.0, 2.0]])
        x = cholesky_solve(a, np.array([3.0, 3.0]))
        assert np.allclose(x, [1.0, 1.0], atol=1e-14)
        assert np.allclose(a @ x, [3.0, 3.0], atol=1e-14)

    def test_random_spd_residuals(self):
        rng = np.random.default_rng(1)
        for _ in range(40):
            n = int(rng.integers(1, 13))
            a = random_spd(rng, n)
            b = rng.standard_normal((n, int(rng.integers(1, 4))))
            x = cholesky_solve(a, b)
            assert np.abs(a @ x - b).max() <= 1e-9

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))  # eig -1

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            cholesky_factor(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_inverse_spd(self):
        rng = np.random.default_rng(2)
        a = random_spd(rng, 5)
        assert np.abs(a @ inverse_spd(a) - np.eye(5)).max() < 1e-10


class TestEigenvalues:
    def test_diagonal(self):
        s = eigenvalues_general(np.diag([3.0, 1.0, -2.0]))
        assert np.allclose(np.sort(s.values.real), [-2, 1, 3])
        assert abs(s.values.imag).max() == 0
        assert s.radius == pytest.approx(3.0)

    def test_rotation_complex_pair(self):
        s = eigenvalues_general(np.array([[0.0, -1.0], [1.0, 0.0]]))
        got = np.sort_complex(s.values)
        assert np.allclose(got, [-1j, 1j])
        assert s.radius == pytest.approx(1.0)

    def test_spectrum_invariants(self):
        rng = np.random.default_rng(3)
        m = rng.standard_normal((7, 7))
        s = eigenvalues_general(m)
        assert isinstance(s, Spectrum)
        assert s.values.shape == (7,)
        assert s.radius == pytest.approx(np.abs(s.values).max())

    def test_symmetric_matches_jacobi_oracle(self):
        rng = np.random.default_rng(4)
        for n in (2, 3, 5, 8, 12):
            a = rng.standard_normal((n, n))
            a = a + a.T
            mine = np.sort(eigenvalues_general(a).values.real)
            oracle = jacobi_eigenvalues(a)
            assert np.abs(mine - oracle).max() <= 1e-8

    def test_general_matches_numpy(self):
        # round the sort key so conjugate pairs line up despite 1e-15 jitter
        def ordered(vals):
            return sorted(vals, key=lambda z: (round(z.real, 9), round(z.imag, 9)))

        rng = np.random.default_rng(5)
        for n in (2, 4, 9, 17):
            m = rng.standard_normal((n, n))
            mine = ordered(eigenvalues_general(m).values)
            ref = ordered(np.linalg.eigvals(m))
            gap = max(abs(a - b) for a, b in zip(mine, ref))
            assert gap <= 1e-8 * max(1.0, max(abs(v) for v in ref))

    def test_hessenberg_preserves_spectrum(self):
        rng = np.random.default_rng(6)
        m = rng.standard_normal((6, 6))
        h = hessenberg(m)
        assert np.abs(np.tril(h, -2)).max() == 0.0
        a = np.sort_complex(np.linalg.eigvals(m))
        b = np.sort_complex(np.linalg.eigvals(h))
        assert np.allclose(a, b, atol=1e-10)

    def test_repeated_and_defective(self):
        # Jordan-like block: eigenvalue 2 twice
        m = np.array([[2.0, 1.0], [0.0, 2.0]])
        s = eigenvalues_general(m)
        assert np.allclose(np.sort(s.values.real), [2, 2])

    def test_no_convergence_cap(self, monkeypatch):
        import blockpool.linalg as la
        monkeypatch.setattr(la, "QR_SWEEP_FACTOR", 0)
        rng = np.random.default_rng(7)
        with pytest.raises(NoConvergence):
            la.eigenvalues_general(rng.standard_normal((6, 6)))


class TestSpectralRadius:
    def test_identity(self):
        assert spectral_radius(np.eye(4)) == pytest.approx(1.0)

    def test_zero(self):
        assert spectral_radius(np.zeros((3, 3))) == pytest.approx(0.0)

    def test_nilpotent(self):
        assert spectral_radius(np.array([[0.0, 2.0], [0.0, 0.0]])) == pytest.approx(0.0)

    def test_transpose_invariance(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            m = rng.standard_normal((6, 6))
            assert spectral_radius(m) == pytest.approx(spectral_radius(m.T), abs=1e-9)


class TestConditionNumber:
    def test_perfect_preconditioner(self):
        rng = np.random.default_rng(9)
        a = random_spd(rng, 4)
        assert spd_condition_number(inverse_spd(a), a) == pytest.approx(1.0, abs=1e-10)

    def test_identity_preconditioner(self):
        assert spd_condition_number(np.eye(2), np.diag([1.0, 4.0])) == pytest.approx(4.0)

    def test_limit_construction_value(self):
        eps = 0.1
        a1, a2 = np.diag([1.0, eps]), np.diag([1.0, 1.0 / eps])
        h = inverse_spd(a1) + inverse_spd(a2)
        kappa = spd_condition_number(h, a1 + a2)
        assert kappa == pytest.approx((eps**2 + 1.0) ** 2 / (4.0 * eps**2), abs=1e-9)

    def test_scale_invariance(self):
        rng = np.random.default_rng(10)
        h, a = random_spd(rng, 5), random_spd(rng, 5)
        k1 = spd_condition_number(h, a)
        for c in (1e-3, 7.0, 1e4):
            assert spd_condition_number(c * h, a) == pytest.approx(k1, rel=1e-9)

    def test_indefinite_a_rejected(self):
        with pytest.raises(NotPositiveDefinite):
            spd_condition_number(np.eye(2), np.diag([1.0, -1.0]))


class TestFrobeniusNormalize:
    def test_simple_column(self):
        assert np.allclose(frobenius_normalize(np.array([[3.0], [4.0]])),
                           [[0.6], [0.8]])

    def test_printed_example_blocks(self):
        raw = np.array([[0.99], [0.01], [0.9], [0.1]])
        x = frobenius_normalize(raw)
        assert np.allclose(x.ravel(), [0.7379, 0.0075, 0.6708, 0.0745], atol=5e-5)
        # eigenvalues of X^T X sum to 1 afterwards
        assert np.trace(x.T @ x) == pytest.approx(1.0, abs=1e-12)

    def test_unit_norm_unchanged(self):
        x = np.array([[1.0, 0.0], [0.0, 0.0]])
        assert np.allclose(frobenius_normalize(x), x)

    def test_zero_matrix(self):
        with pytest.raises(ZeroMatrix):
            frobenius_normalize(np.zeros((2, 2)))


def test_eigenvalues_symmetric_sorted():
    rng = np.random.default_rng(11)
    a = random_spd(rng, 6)
    ev = eigenvalues_symmetric(a)
    assert (np.diff(ev) >= 0).all()
    assert np.abs(ev - jacobi_eigenvalues(a)).max() <= 1e-9
