"""Pure-numpy twin of the compiled kernels in ``_core``.

Selected by ``backend`` when the extension is unavailable or explicitly
requested.  Semantics match the compiled versions; summation order may differ
at the level of float rounding (numpy pairwise vs compensated loops).
"""

from __future__ import annotations

import numpy as np


def inv_power_sum(vals: np.ndarray, weights: np.ndarray, theta: float, power: int) -> float:
    r = theta - vals
    if power == 2:
        return float(np.sum(weights / (r * r)))
    return float(np.sum(weights / r))


def stieltjes_sum(vals: np.ndarray, weights: np.ndarray, z: complex) -> complex:
    return complex(np.sum(weights / (z - vals)))


def fixed_point_grid(
    vals: np.ndarray,
    weights: np.ndarray,
    xs: np.ndarray,
    eps: float,
    damping: float,
    tol: float,
    max_iter: int,
    g0: np.ndarray,
):
    m = xs.shape[0]
    g_out = np.empty(m, dtype=np.complex128)
    conv = np.zeros(m, dtype=bool)
    iters = np.zeros(m, dtype=np.int64)
    for j in range(m):
        z = xs[j] + 1j * eps
        g = complex(g0[j])
        damp = damping
        it = 0
        while it < max_iter:
            gnu = complex(np.sum(weights / ((z - g) - vals)))
            it += 1
            if gnu.imag > 0.0:
                damp /= 2.0
                g = complex(g0[j])
                if damp < 1e-6:
                    break
                continue
            # residual is checked at the returned iterate, so keep g on success
            if abs(gnu - g) <= tol:
                conv[j] = True
                break
            g = (1.0 - damp) * g + damp * gnu
        g_out[j] = g
        iters[j] = it
    return g_out, conv, iters
