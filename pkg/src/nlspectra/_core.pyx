# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: reciprocal-moment sums and the subordination fixed point.

These dominate the runtime of threshold root-finding (which nests two
bisections around the reciprocal-moment integral) and of spectral-density
evaluation.  A pure-Python twin with identical signatures lives in
``_core_py``; ``backend`` picks one at import time.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs


def inv_power_sum(double[::1] vals, double[::1] weights, double theta, int power):
    """Kahan-compensated sum of weights / (theta - vals)**power (power 1 or 2)."""
    cdef Py_ssize_t i, n = vals.shape[0]
    cdef double s = 0.0, comp = 0.0, term, t, r
    for i in range(n):
        r = theta - vals[i]
        term = weights[i] / r
        if power == 2:
            term = term / r
        t = s + term
        if fabs(s) >= fabs(term):
            comp += (s - t) + term
        else:
            comp += (term - t) + s
        s = t
    return s + comp


def stieltjes_sum(double[::1] vals, double[::1] weights, double complex z):
    """Sum of weights / (z - vals) for complex z."""
    cdef Py_ssize_t i, n = vals.shape[0]
    cdef double complex s = 0
    for i in range(n):
        s = s + weights[i] / (z - vals[i])
    return s


def fixed_point_grid(double[::1] vals, double[::1] weights, double[::1] xs,
                     double eps, double damping, double tol, int max_iter,
                     double complex[::1] g0):
    """Damped fixed point g = G_nu(z - g) at z = x + i*eps, per grid point.

    An iterate escaping to the upper half-plane triggers a damping halving and
    a restart from the initial guess.  Returns (g, converged, iterations).
    """
    cdef Py_ssize_t j, i, m = xs.shape[0], n = vals.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] g_out = np.empty(m, dtype=np.complex128)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] conv = np.zeros(m, dtype=np.uint8)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] iters = np.zeros(m, dtype=np.int64)
    cdef double complex z, g, gnu, w, diff
    cdef double damp
    cdef int it
    for j in range(m):
        z = xs[j] + 1j * eps
        g = g0[j]
        damp = damping
        it = 0
        while it < max_iter:
            w = z - g
            gnu = 0
            for i in range(n):
                gnu = gnu + weights[i] / (w - vals[i])
            it += 1
            if gnu.imag > 0.0:
                damp = damp / 2.0
                g = g0[j]
                if damp < 1e-6:
                    break
                continue
            diff = gnu - g
            # residual is checked at the returned iterate, so keep g on success
            if abs(diff) <= tol:
                conv[j] = 1
                break
            g = (1.0 - damp) * g + damp * gnu
        g_out[j] = g
        iters[j] = it
    return g_out, conv.astype(bool), iters
