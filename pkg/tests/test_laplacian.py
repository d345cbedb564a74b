import numpy as np
import pytest

import nlspectra as nl
from nlspectra.errors import InvalidDimensionError


def random_symmetric(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    return (a + a.T) / 2


class TestBuildLaplacian:
    def test_zero_sigma_is_identity_map(self):
        y = random_symmetric(6, 0)
        assert np.array_equal(nl.build_laplacian(y, nl.Zero()), y)

    def test_constant_sigma_adds_identity(self):
        y = random_symmetric(6, 1)
        c = 1.75
        assert np.array_equal(nl.build_laplacian(y, nl.Constant(c)), y + c * np.eye(6))

    def test_direct_definition_2x2(self):
        y = np.array([[0.0, 1.0], [1.0, 0.0]])
        sig = nl.Tabulated(grid=(-3.0, 3.0), values=(-3.0, 3.0))  # identity on [-3, 3]
        lap = nl.build_laplacian(y, sig)
        assert np.array_equal(lap, np.ones((2, 2)))

    def test_non_square_rejected(self):
        with pytest.raises(InvalidDimensionError):
            nl.build_laplacian(np.zeros((3, 4)), nl.Zero())

    def test_shift_equivariance_exact(self):
        y = random_symmetric(8, 2)
        for sigma in [nl.Tanh(1.2, 0.8), nl.ZShaped(1.0, 2.0, -0.3), nl.Step((0.0,), (0.0, 1.0))]:
            for c in (-1.0, 0.5, 3.0):
                left = nl.build_laplacian(y, nl.shifted(sigma, c))
                right = nl.build_laplacian(y, sigma) + c * np.eye(8)
                assert np.array_equal(left, right)

    def test_permutation_equivariance(self):
        y = random_symmetric(6, 3)
        sig = nl.Tanh(1.0, 1.0)
        rng = np.random.default_rng(0)
        perm = rng.permutation(6)
        p = np.eye(6)[perm]
        left = nl.build_laplacian(p @ y @ p.T, sig)
        right = p @ nl.build_laplacian(y, sig) @ p.T
        assert np.abs(left - right).max() <= 1e-14


class TestBasis:
    def test_n2_column(self):
        basis = nl.ones_complement_basis(2)
        col = basis.v[:, 0]
        expected = np.array([1.0, -1.0]) / np.sqrt(2)
        assert np.allclose(col, expected) or np.allclose(col, -expected)

    def test_too_small(self):
        with pytest.raises(InvalidDimensionError):
            nl.ones_complement_basis(1)

    @pytest.mark.parametrize("n", [2, 3, 5, 17, 64])
    def test_invariants(self, n):
        basis = nl.ones_complement_basis(n)
        assert basis.v.shape == (n, n - 1)
        assert np.abs(basis.v.T @ np.ones(n)).max() <= 1e-12
        assert np.abs(basis.v.T @ basis.v - np.eye(n - 1)).max() <= 1e-12
        proj = np.eye(n) - np.full((n, n), 1.0 / n)
        assert np.abs(basis.v @ basis.v.T - proj).max() <= 1e-12
        assert basis.validate()

    def test_deterministic(self):
        assert np.array_equal(nl.ones_complement_basis(9).v, nl.ones_complement_basis(9).v)


class TestBuildCompressed:
    def test_identity_zero_sigma(self):
        out = nl.build_compressed(np.eye(7), nl.Zero())
        assert out.shape == (6, 6)
        assert np.abs(out - np.eye(6)).max() <= 1e-12

    def test_constant_sigma_shifts(self):
        y = random_symmetric(7, 4)
        c = -0.6
        base = nl.build_compressed(y, nl.Zero())
        shifted = nl.build_compressed(y, nl.Constant(c))
        assert np.abs(shifted - (base + c * np.eye(6))).max() <= 1e-12

    def test_interlacing(self):
        y = random_symmetric(8, 5)
        sig = nl.Tanh(1.0, 0.7)
        lam = np.sort(np.linalg.eigvalsh(nl.build_laplacian(y, sig)))[::-1]
        mu = np.sort(np.linalg.eigvalsh(nl.build_compressed(y, sig)))[::-1]
        for i in range(7):
            assert lam[i + 1] - 1e-10 <= mu[i] <= lam[i] + 1e-10

    def test_output_exactly_symmetric(self):
        y = random_symmetric(30, 6)
        out = nl.build_compressed(y, nl.Tanh(2.0, 0.3))
        assert np.array_equal(out, out.T)

    def test_too_small(self):
        with pytest.raises(InvalidDimensionError):
            nl.build_compressed(np.ones((1, 1)), nl.Zero())


def test_compress_vector_preserves_norm_orthogonal_part():
    rng = np.random.default_rng(7)
    x = rng.standard_normal(12)
    x -= x.mean()  # orthogonal to ones
    z = nl.compress_vector(x)
    assert z.shape == (11,)
    assert np.linalg.norm(z) == pytest.approx(np.linalg.norm(x), rel=1e-12)
