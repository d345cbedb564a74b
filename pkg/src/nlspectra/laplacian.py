"""Construction of the deformed observation matrix and its compressed variant.

The deformation adds a diagonal built from the nonlinearity applied to the
row sums: ``L = y_hat + diag(sigma(y_hat @ 1))``.  The compressed variant
conjugates by an orthonormal basis of the complement of the all-ones
direction, which decouples the noise from the diagonal term.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidDimensionError
from .nonlin import SigmaSpec, _family_eval


@dataclass(frozen=True)
class CompressionBasis:
    """Orthonormal basis (columns of ``v``) of the complement of the ones vector."""

    n: int
    v: np.ndarray  # n x (n-1)

    def validate(self, tol: float = 1e-12) -> bool:
        gram_err = np.abs(self.v.T @ self.v - np.eye(self.n - 1)).max()
        proj = np.eye(self.n) - np.full((self.n, self.n), 1.0 / self.n)
        proj_err = np.abs(self.v @ self.v.T - proj).max()
        return bool(gram_err <= tol and proj_err <= tol)


def build_laplacian(y_hat: np.ndarray, sigma: SigmaSpec) -> np.ndarray:
    """Return ``y_hat + diag(sigma(y_hat @ 1))``.

    Row sums use numpy's pairwise summation, which is deterministic for a
    fixed build.  A vertical shift carried by ``sigma`` is applied as a final
    multiple of the identity so that shifting the nonlinearity commutes
    bitwise with shifting the output.
    """
    y_hat = np.asarray(y_hat, dtype=float)
    if y_hat.ndim != 2 or y_hat.shape[0] != y_hat.shape[1]:
        raise InvalidDimensionError(f"expected a square matrix, got shape {y_hat.shape}")
    row_sums = y_hat.sum(axis=1)
    out = y_hat + np.diag(_family_eval(sigma, row_sums))
    if sigma.shift != 0.0:
        out = out + sigma.shift * np.eye(y_hat.shape[0])
    return out


@lru_cache(maxsize=8)
def _cached_basis(n: int) -> np.ndarray:
    # Householder reflector swapping e_1 with the normalized ones vector;
    # its trailing columns span the complement of ones.
    u = -np.full(n, 1.0 / np.sqrt(n))
    u[0] += 1.0
    h = np.eye(n) - (2.0 / np.dot(u, u)) * np.outer(u, u)
    return h[:, 1:]


def ones_complement_basis(n: int) -> CompressionBasis:
    """Deterministic orthonormal basis of the orthogonal complement of ones."""
    if n < 2:
        raise InvalidDimensionError(f"compression needs n >= 2, got {n}")
    return CompressionBasis(n=n, v=_cached_basis(n))


def build_compressed(y_hat: np.ndarray, sigma: SigmaSpec, basis: CompressionBasis | None = None) -> np.ndarray:
    """Return ``V^T L V``, the (n-1)-dimensional compression of the Laplacian."""
    y_hat = np.asarray(y_hat, dtype=float)
    n = y_hat.shape[0]
    if y_hat.ndim != 2 or y_hat.shape[1] != n:
        raise InvalidDimensionError(f"expected a square matrix, got shape {y_hat.shape}")
    if n < 2:
        raise InvalidDimensionError(f"compression needs n >= 2, got {n}")
    if basis is None:
        basis = ones_complement_basis(n)
    lap = build_laplacian(y_hat, sigma)
    out = basis.v.T @ (lap @ basis.v)
    # BLAS rounding leaves ~1e-13 asymmetry; restore exact symmetry.
    return (out + out.T) / 2.0


def compress_vector(x: np.ndarray, basis: CompressionBasis | None = None) -> np.ndarray:
    """Project a vector into the compressed coordinates (``V^T x``)."""
    x = np.asarray(x, dtype=float)
    if basis is None:
        basis = ones_complement_basis(x.shape[0])
    return basis.v.T @ x
