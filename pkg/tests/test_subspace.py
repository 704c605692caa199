import numpy as np
import pytest

from conntensor.errors import DataError
from conntensor.subspace import svd_r
from conntensor.tensor import DenseMatrix

from oracles import jacobi_svd


def leading_subspace(a):
    return svd_r(DenseMatrix.from_array(a), a.shape[1] if a.ndim == 1 else 2)


class TestSvdR:
    def test_diagonal_matrix(self):
        sub = svd_r(DenseMatrix.from_array(np.diag([3.0, 2.0, 1.0])), 2)
        np.testing.assert_allclose(sub.singular_values, [3.0, 2.0], atol=1e-10)
        basis = sub.basis.array
        # basis spans e1, e2: projector equals diag(1, 1, 0)
        np.testing.assert_allclose(basis @ basis.T, np.diag([1.0, 1.0, 0.0]), atol=1e-9)

    def test_rank_one(self):
        rng = np.random.default_rng(0)
        u = rng.standard_normal(6)
        v = rng.standard_normal(9)
        sub = svd_r(DenseMatrix.from_array(np.outer(u, v)), 1)
        assert sub.singular_values[0] == pytest.approx(
            np.linalg.norm(u) * np.linalg.norm(v), rel=1e-10
        )
        direction = sub.basis.array[:, 0]
        cosine = abs(direction @ u) / np.linalg.norm(u)
        assert cosine == pytest.approx(1.0, abs=1e-10)

    def test_singular_values_match_jacobi_oracle(self):
        rng = np.random.default_rng(42)
        a = rng.standard_normal((50, 200))
        sub = svd_r(DenseMatrix.from_array(a), 5)
        _, sigma, _ = jacobi_svd(a)
        np.testing.assert_allclose(sub.singular_values, sigma[:5], rtol=1e-8)

    def test_subspace_matches_jacobi_on_small_instances(self):
        # planted rank-3 structure keeps the spectral gap healthy, so the
        # subspace comparison is well-posed
        rng = np.random.default_rng(1)
        r = 3
        for trial in range(5):
            left = np.linalg.qr(rng.standard_normal((8, r)))[0]
            right = np.linalg.qr(rng.standard_normal((12, r)))[0]
            a = 3.0 * left @ np.diag([3.0, 2.5, 2.0]) @ right.T
            a += 0.05 * rng.standard_normal((8, 12))
            sub = svd_r(DenseMatrix.from_array(a), r)
            u_ref, _, _ = jacobi_svd(a)
            p_ref = u_ref[:, :r] @ u_ref[:, :r].T
            np.testing.assert_allclose(sub.projector(), p_ref, atol=1e-8)

    def test_projection_idempotent(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((30, 40))
        proj = svd_r(DenseMatrix.from_array(a), 4).projector()
        assert np.linalg.norm(proj @ proj - proj) < 1e-9

    def test_basis_orthonormal_and_values_sorted(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((20, 15))
        sub = svd_r(DenseMatrix.from_array(a), 6)
        b = sub.basis.array
        np.testing.assert_allclose(b.T @ b, np.eye(6), atol=1e-10)
        assert (np.diff(sub.singular_values) <= 1e-12).all()
        assert (sub.singular_values >= 0).all()

    def test_residual_minimal_over_rank_r_projections(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((12, 30))
        r = 3
        sub = svd_r(DenseMatrix.from_array(a), r)
        residual = np.linalg.norm(a - sub.projector() @ a)
        _, sigma, _ = jacobi_svd(a)
        optimal = np.sqrt((sigma[r:] ** 2).sum())
        assert residual == pytest.approx(optimal, rel=1e-9)

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        a = DenseMatrix.from_array(rng.standard_normal((10, 20)))
        s1 = svd_r(a, 3)
        s2 = svd_r(a, 3)
        np.testing.assert_array_equal(s1.basis.array, s2.basis.array)
        np.testing.assert_array_equal(s1.singular_values, s2.singular_values)

    def test_sign_convention(self):
        rng = np.random.default_rng(6)
        a = rng.standard_normal((9, 14))
        basis = svd_r(DenseMatrix.from_array(a), 4).basis.array
        for col in basis.T:
            assert col[np.abs(col).argmax()] > 0

    def test_r_out_of_range(self):
        a = DenseMatrix.from_array(np.ones((3, 5)))
        with pytest.raises(ValueError):
            svd_r(a, 0)
        with pytest.raises(ValueError):
            svd_r(a, 4)

    def test_nonfinite_rejected(self):
        a = np.ones((3, 3))
        a[1, 1] = np.nan
        with pytest.raises(DataError):
            svd_r(DenseMatrix.from_array(a), 1)
