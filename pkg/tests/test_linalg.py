import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from localicp.errors import InvalidInputError, ShapeError
from localicp.linalg import least_squares, numerical_rank, pinv, residuals


def penrose_defects(m, m_pinv):
    """Norms of the four Penrose condition residuals, relative to ||m||."""
    scale = max(np.linalg.norm(m), 1.0)
    return (
        np.linalg.norm(m @ m_pinv @ m - m) / scale,
        np.linalg.norm(m_pinv @ m @ m_pinv - m_pinv) / scale,
        np.linalg.norm((m @ m_pinv) - (m @ m_pinv).T) / scale,
        np.linalg.norm((m_pinv @ m) - (m_pinv @ m).T) / scale,
    )


class TestPinv:
    def test_identity(self):
        np.testing.assert_array_equal(pinv(np.eye(3)), np.eye(3))

    def test_zero_matrix(self):
        out = pinv(np.zeros((2, 3)))
        assert out.shape == (3, 2)
        np.testing.assert_array_equal(out, np.zeros((3, 2)))

    def test_full_rank_tall_matrix_penrose(self):
        rng = np.random.default_rng(42)
        m = rng.normal(size=(4, 2))
        mp = pinv(m)
        assert np.linalg.norm(m @ mp @ m - m) < 1e-10
        for defect in penrose_defects(m, mp):
            assert defect < 1e-10

    def test_rank_deficient(self):
        m = np.array([[1.0, 2.0], [2.0, 4.0]])  # rank 1
        mp = pinv(m)
        for defect in penrose_defects(m, mp):
            assert defect < 1e-12

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidInputError):
            pinv(np.array([[1.0, np.nan]]))
        with pytest.raises(InvalidInputError):
            pinv(np.array([[np.inf, 1.0]]))

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        m = rng.normal(size=(5, 3))
        a, b = pinv(m), pinv(m.copy())
        assert a.tobytes() == b.tobytes()


class TestNumericalRank:
    @pytest.mark.parametrize("n", [1, 3, 7])
    def test_identity(self, n):
        assert numerical_rank(np.eye(n)) == n

    def test_duplicate_columns(self):
        col = np.arange(5.0)
        m = np.column_stack([col, col, np.ones(5)])
        assert numerical_rank(m) == 2

    def test_zero_matrix(self):
        assert numerical_rank(np.zeros((4, 4))) == 0

    def test_random_full_rank_matches_svd_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n, k = rng.integers(2, 12), rng.integers(1, 6)
            m = rng.normal(size=(max(n, k + 1), k))
            assert numerical_rank(m) == np.linalg.matrix_rank(m) == k

    @settings(max_examples=50, deadline=None)
    @given(
        m=arrays(np.float64, (6, 3), elements=st.floats(-1e3, 1e3)),
        col=arrays(np.float64, (6,), elements=st.floats(-1e3, 1e3)),
    )
    def test_rank_monotone_under_column_append(self, m, col):
        wider = np.column_stack([m, col])
        assert numerical_rank(wider) >= numerical_rank(m)


class TestLeastSquares:
    def test_empty_subset_gives_empty_beta_and_full_residual(self):
        y = np.array([1.0, -2.0, 3.0])
        x = np.zeros((3, 0))
        beta = least_squares(x, y)
        assert beta.shape == (0,)
        np.testing.assert_array_equal(residuals(x, y, beta), y)

    def test_square_invertible_interpolates(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(4, 4)) + 4 * np.eye(4)
        y = rng.normal(size=4)
        beta = least_squares(x, y)
        np.testing.assert_allclose(beta, np.linalg.solve(x, y), atol=1e-10)
        assert np.linalg.norm(residuals(x, y, beta)) < 1e-10

    def test_overdetermined_matches_normal_equations_oracle(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(10, 3))
        y = rng.normal(size=10)
        beta = least_squares(x, y)
        # Independent brute-force route: explicit inverse of the Gram matrix.
        oracle = np.linalg.inv(x.T @ x) @ x.T @ y
        np.testing.assert_allclose(beta, oracle, atol=1e-10)

    def test_optimality_against_perturbations(self):
        rng = np.random.default_rng(19)
        x = rng.normal(size=(20, 4))
        y = rng.normal(size=20)
        beta = least_squares(x, y)
        base = np.linalg.norm(y - x @ beta)
        for _ in range(50):
            delta = rng.normal(scale=0.1, size=4)
            assert np.linalg.norm(y - x @ (beta + delta)) >= base - 1e-10

    def test_row_mismatch(self):
        with pytest.raises(ShapeError):
            least_squares(np.ones((3, 2)), np.ones(4))


class TestResiduals:
    def test_orthogonality_of_ls_residuals(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            n, k = 15, 4
            x = rng.normal(size=(n, k))
            y = rng.normal(size=n)
            r = residuals(x, y, least_squares(x, y))
            assert np.linalg.norm(x.T @ r) <= 1e-8 * np.linalg.norm(y)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            residuals(np.ones((3, 2)), np.ones(3), np.ones(3))


def test_penrose_conditions_random_sweep():
    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 9))
        k = int(rng.integers(1, 9))
        m = rng.normal(size=(n, k))
        if rng.random() < 0.3:  # introduce rank deficiency
            m[:, -1] = m[:, 0] * 2.0 if k > 1 else 0.0
        worst = max(worst, *penrose_defects(m, pinv(m)))
    assert worst < 1e-8
