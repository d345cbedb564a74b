"""Symmetric eigensolvers, spectral summaries, and the secular-equation oracle.

Full decompositions go through LAPACK's symmetric driver (tridiagonalization
plus implicit-shift iteration) via numpy.  The top eigenpair uses a Lanczos
iteration with full reorthogonalization and a deterministic start vector, so
repeated runs are bit-identical.  ``secular_top_eigenvalue`` solves the
rank-one-plus-diagonal characteristic equation directly and serves as an
independent oracle for the dense solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AsymmetricMatrixError, InvalidDimensionError, NonConvergenceError

_LANCZOS_BLOCK = 80
_START_SEED = 0x51AC2005


@dataclass(frozen=True)
class SpectralSummary:
    """Eigenvalues (descending), the top eigenpair, and signal overlap if known."""

    eigenvalues: np.ndarray
    top_vector: np.ndarray
    lambda1: float
    overlap: float | None = None

    def to_json_obj(self) -> dict:
        obj = {
            "lambda1": self.lambda1,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "top_vector": [float(v) for v in self.top_vector],
        }
        if self.overlap is not None:
            obj["overlap"] = self.overlap
        return obj


def _check_symmetric(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidDimensionError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max()) if m.size else 1.0)
    asym = float(np.abs(m - m.T).max()) if m.size else 0.0
    if asym > 1e-10 * scale:
        raise AsymmetricMatrixError(
            f"matrix asymmetry {asym:.3e} exceeds tolerance {1e-10 * scale:.3e}; "
            "refusing to symmetrize silently"
        )
    return m


def full_spectrum(m: np.ndarray) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, sorted descending."""
    m = _check_symmetric(m)
    vals = np.linalg.eigvalsh(m)
    return vals[::-1].copy()


def _fix_sign(v: np.ndarray) -> np.ndarray:
    idx = int(np.argmax(np.abs(v)))
    return -v if v[idx] < 0 else v


def top_eigenpair(m: np.ndarray, tol: float = 1e-10, max_iter: int = 2000) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and unit eigenvector via restarted Lanczos.

    The residual criterion is ``||M v - lambda v|| <= tol * scale`` where the
    scale is the largest Ritz magnitude seen.  The returned vector has its
    largest-magnitude entry positive.  Raises :class:`NonConvergenceError`
    (carrying the last residual) if ``max_iter`` matrix-vector products are
    exhausted.
    """
    m = _check_symmetric(m)
    if tol <= 0:
        raise ValueError("tol must be > 0")
    n = m.shape[0]
    if n == 1:
        return float(m[0, 0]), np.ones(1)

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(_START_SEED)))
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)

    matvecs = 0
    residual = np.inf
    while matvecs < max_iter:
        block = min(_LANCZOS_BLOCK, n, max_iter - matvecs)
        basis = np.empty((block, n))
        alphas = np.empty(block)
        betas = np.empty(block)
        basis[0] = q
        k = 0
        for k in range(block):
            w = m @ basis[k]
            matvecs += 1
            alphas[k] = basis[k] @ w
            w -= alphas[k] * basis[k]
            if k > 0:
                w -= betas[k - 1] * basis[k - 1]
            # full reorthogonalization keeps the Krylov basis clean at this scale
            w -= basis[: k + 1].T @ (basis[: k + 1] @ w)
            betas[k] = np.linalg.norm(w)
            if betas[k] < 1e-14 or k == block - 1:
                break
            basis[k + 1] = w / betas[k]
        t = np.diag(alphas[: k + 1])
        if k > 0:
            off = np.arange(k)
            t[off, off + 1] = betas[:k]
            t[off + 1, off] = betas[:k]
        tv, tw = np.linalg.eigh(t)
        ritz_val = float(tv[-1])
        ritz_vec = basis[: k + 1].T @ tw[:, -1]
        ritz_vec /= np.linalg.norm(ritz_vec)
        scale = max(abs(float(tv[0])), abs(ritz_val), 1e-300)
        residual = float(np.linalg.norm(m @ ritz_vec - ritz_val * ritz_vec))
        matvecs += 1
        if residual <= tol * scale:
            return ritz_val, _fix_sign(ritz_vec)
        q = ritz_vec
    raise NonConvergenceError(
        f"Lanczos did not reach tol={tol} within {max_iter} matvecs (last residual {residual:.3e})",
        residual=residual,
    )


def overlap(v: np.ndarray, x: np.ndarray) -> float:
    """|<v, x>| / (||v|| ||x||), the sign-invariant alignment in [0, 1]."""
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    nv = float(np.linalg.norm(v))
    nx = float(np.linalg.norm(x))
    if nv == 0.0 or nx == 0.0:
        raise ValueError("overlap is undefined for zero vectors")
    return min(1.0, abs(float(v @ x)) / (nv * nx))


def summarize(m: np.ndarray, x: np.ndarray | None = None) -> SpectralSummary:
    """Full spectrum plus the top eigenpair of a symmetric matrix."""
    m = _check_symmetric(m)
    vals, vecs = np.linalg.eigh(m)
    top = _fix_sign(vecs[:, -1].copy())
    ov = None
    if x is not None and np.linalg.norm(x) > 0:
        ov = overlap(top, x)
    return SpectralSummary(
        eigenvalues=vals[::-1].copy(),
        top_vector=top,
        lambda1=float(vals[-1]),
        overlap=ov,
    )


def secular_top_eigenvalue(y: np.ndarray, d: np.ndarray, tol: float = 1e-12) -> float:
    """Largest eigenvalue of ``y y^T + diag(d)`` from its secular equation.

    Outside the diagonal range, lambda is an eigenvalue iff
    ``sum_i y_i^2 / (lambda - d_i) = 1``.  The largest root is isolated on
    ``(max d_i, max d_i + ||y||^2]`` and found by bisection; coordinates with
    ``y_i = 0`` decouple and only contribute their diagonal values.
    """
    y = np.asarray(y, dtype=float)
    d = np.asarray(d, dtype=float)
    if y.shape != d.shape or y.ndim != 1:
        raise InvalidDimensionError("y and d must be 1-d arrays of equal length")
    if not np.any(y):
        raise ValueError("y must be nonzero (otherwise the eigenvalues are just d)")
    active = y != 0.0
    y2 = y[active] ** 2
    da = d[active]
    d_top = float(da.max())
    decoupled = float(d[~active].max()) if np.any(~active) else -np.inf

    total = float(y2.sum())

    def f(lam: float) -> float:
        return float(np.sum(y2 / (lam - da))) - 1.0

    lo = d_top
    hi = d_top + total + 1e-300
    # f(lo+) = +inf, f(hi) <= 0; bisect on the open interval.
    while hi - lo > tol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    return max(root, decoupled)


def max_row_statistic(y_hat: np.ndarray) -> float:
    """Largest row sum of the observation: the degree-based detector statistic."""
    y_hat = np.asarray(y_hat, dtype=float)
    if y_hat.ndim != 2 or y_hat.shape[0] != y_hat.shape[1]:
        raise InvalidDimensionError(f"expected a square matrix, got shape {y_hat.shape}")
    return float(y_hat.sum(axis=1).max())
