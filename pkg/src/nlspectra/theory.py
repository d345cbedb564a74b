"""Analytic predictions: effective signal eigenvalue, detection threshold,
outlier location, and the limiting bulk density.

All quantities reduce to Gaussian reciprocal-moment integrals of the form
``E[(theta - sigma(shift + g))^-p]`` with ``g`` standard normal.  These are
evaluated by Gaussian-weight quadrature, except for step nonlinearities where
the integral collapses to an exact sum of Gaussian cell masses (error
function differences) against the step levels -- the fast path that makes
black-box optimization over many step parameters practical.

Vertical shifts of the nonlinearity are factored out analytically before any
root-finding: a shift translates the effective eigenvalue, the outlier, and
the bulk edge by the same constant and leaves the threshold unchanged, so
computing on the centered family and translating afterwards is both cheaper
and exactly shift-equivariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.special import ndtr, roots_hermitenorm

from . import backend
from .errors import (
    BracketError,
    InvalidParameterError,
    NumericalError,
    SingularArgumentError,
)
from .models import ModelSpec
from .nonlin import Constant, SigmaSpec, Step, Zero, ZShaped, _family_eval, sigma_edges

# Gap below which reciprocal-moment quadrature is considered near-singular and
# node counts are doubled until two refinements agree.
_NEAR_EDGE_GAP = 0.25
_MAX_REFINE_DOUBLINGS = 3
_EDGE_MARGIN = 1e-9


@dataclass(frozen=True)
class QuadratureConfig:
    hermite_nodes: int = 200
    eta_nodes: int = 256
    tol_root: float = 1e-10
    tol_fixed_point: float = 1e-9
    max_fixed_point_iters: int = 10_000
    damping: float = 0.5
    inversion_epsilon: float = 1e-3

    def __post_init__(self):
        if self.hermite_nodes < 8 or self.eta_nodes < 8:
            raise InvalidParameterError("node counts must be >= 8")
        if min(self.tol_root, self.tol_fixed_point, self.inversion_epsilon) <= 0:
            raise InvalidParameterError("tolerances must be > 0")
        if not (0 < self.damping <= 1):
            raise InvalidParameterError("damping must be in (0, 1]")


DEFAULT_QUADRATURE = QuadratureConfig()


@dataclass(frozen=True)
class TheoryResult:
    theta: float
    beta_star: float
    lambda1_predicted: float
    bulk_edge_plus: float
    has_outlier: bool

    def to_json_obj(self) -> dict:
        return {
            "theta": self.theta,
            "beta_star": self.beta_star,
            "lambda1_predicted": self.lambda1_predicted,
            "bulk_edge_plus": self.bulk_edge_plus,
            "has_outlier": self.has_outlier,
        }


@dataclass(frozen=True)
class DensityResult:
    """Bulk density estimates on a grid plus per-point convergence flags.

    ``stieltjes`` holds the converged transform values G(x + i*eps), from
    which the density is read off as -Im(G)/pi.
    """

    x: np.ndarray
    density: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    stieltjes: np.ndarray


@lru_cache(maxsize=16)
def _hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Probabilists' Gauss-Hermite nodes with weights normalized to sum 1."""
    nodes, weights = roots_hermitenorm(n)
    return nodes, weights / weights.sum()


@lru_cache(maxsize=16)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _split_shift(sigma: SigmaSpec) -> tuple[SigmaSpec, float]:
    return replace(sigma, shift=0.0), sigma.shift


def _quadrature_exact(sigma: SigmaSpec) -> bool:
    """True when the discretization below does not depend on the node count."""
    return isinstance(sigma, (Zero, Constant, Step))


def _step_masses(sigma: Step, shift: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact cell probabilities of sigma(shift + g): values and Gaussian masses."""
    cdf = ndtr(np.asarray(sigma.knots, dtype=float) - shift)
    masses = np.diff(np.concatenate(([0.0], cdf, [1.0])))
    vals = np.asarray(sigma.values, dtype=float) + sigma.shift
    return vals, masses


def _sigma_gauss_nodes(sigma: SigmaSpec, shift: float, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Discretize the law of sigma(shift + g), g ~ N(0,1), as (values, weights).

    Point-like and step families are exact (error-function cell masses);
    piecewise-linear ramps combine exact flat masses with Gauss-Legendre on
    the sloped window; smooth families fall back to Gaussian-weight
    quadrature.  Weights sum to 1 up to negligible tail truncation.
    """
    if isinstance(sigma, Zero):
        return np.array([sigma.shift]), np.array([1.0])
    if isinstance(sigma, Constant):
        return np.array([sigma.c + sigma.shift]), np.array([1.0])
    if isinstance(sigma, Step):
        return _step_masses(sigma, shift)
    if isinstance(sigma, ZShaped):
        lo_knot, hi_knot = sigma.c - shift, sigma.a + sigma.c - shift
        p_lo = float(ndtr(lo_knot))
        p_hi = float(1.0 - ndtr(hi_knot))
        vals = [np.array([sigma.shift, sigma.b + sigma.shift])]
        weights = [np.array([p_lo, p_hi])]
        # the ramp window, clipped to where the Gaussian has any mass
        a, b = max(lo_knot, -9.0), min(hi_knot, 9.0)
        if b > a:
            t, wt = _legendre(max(32, n_nodes // 2))
            g = 0.5 * (b - a) * t + 0.5 * (a + b)
            dens = np.exp(-0.5 * g * g) / np.sqrt(2.0 * np.pi)
            vals.append(_family_eval(sigma, shift + g) + sigma.shift)
            weights.append(0.5 * (b - a) * wt * dens)
        return np.concatenate(vals), np.concatenate(weights)
    nodes, w = _hermite(n_nodes)
    return _family_eval(sigma, shift + nodes) + sigma.shift, w


def _nu_discretization(sigma: SigmaSpec, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Discretize nu = sigma(N(0,1)) as (values, weights)."""
    return _sigma_gauss_nodes(sigma, 0.0, n_nodes)


def _inv_moment(vals: np.ndarray, weights: np.ndarray, theta: float, power: int) -> float:
    out = backend.kernels().inv_power_sum(
        np.ascontiguousarray(vals, dtype=float),
        np.ascontiguousarray(weights, dtype=float),
        float(theta),
        int(power),
    )
    if not np.isfinite(out):
        raise NumericalError(f"reciprocal moment diverged at theta={theta} (power {power})")
    return out


def gauss_expect_inverse(
    sigma: SigmaSpec, theta: float, shift: float, power: int, q: QuadratureConfig = DEFAULT_QUADRATURE
) -> float:
    """E over g ~ N(0,1) of ``(theta - sigma(shift + g))^-power`` for power 1 or 2.

    Requires ``theta`` strictly above the supremum of sigma.  Step
    nonlinearities use the exact error-function fast path; other families use
    Gaussian-weight quadrature with automatic node doubling near the singular
    regime.
    """
    if power not in (1, 2):
        raise InvalidParameterError(f"power must be 1 or 2, got {power}")
    _, hi = sigma_edges(sigma)
    if not theta > hi:
        raise SingularArgumentError(
            f"theta = {theta} must exceed edge_plus(sigma) = {hi}: integrand is unbounded"
        )
    if isinstance(sigma, Step):
        vals, masses = _step_masses(sigma, shift)
        r = theta - vals
        terms = masses / (r * r) if power == 2 else masses / r
        # cell terms span many orders of magnitude near the edge; fsum is exact
        out = math.fsum(terms)
        if not np.isfinite(out):
            raise NumericalError(f"step fast path diverged at theta={theta}")
        return out

    n = q.hermite_nodes
    vals, weights = _sigma_gauss_nodes(sigma, shift, n)
    est = _inv_moment(vals, weights, theta, power)
    if not _quadrature_exact(sigma) and theta - hi < _NEAR_EDGE_GAP:
        for _ in range(_MAX_REFINE_DOUBLINGS):
            n *= 2
            vals, weights = _sigma_gauss_nodes(sigma, shift, n)
            refined = _inv_moment(vals, weights, theta, power)
            if abs(refined - est) <= (q.tol_root / 10.0) * max(1.0, abs(refined)):
                return refined
            est = refined
    return est


def stieltjes_pushforward(sigma: SigmaSpec, z: complex, q: QuadratureConfig = DEFAULT_QUADRATURE) -> complex:
    """Stieltjes transform of nu = sigma(N(0,1)) at z.

    Real z must lie outside the closed range of sigma; for Im z > 0 the result
    has a negative imaginary part.
    """
    z = complex(z)
    if z.imag < 0:
        raise InvalidParameterError("stieltjes_pushforward is defined on the closed upper half-plane")
    lo, hi = sigma_edges(sigma)
    if z.imag == 0 and lo <= z.real <= hi:
        raise SingularArgumentError(f"z = {z.real} lies inside the support [{lo}, {hi}]")
    vals, weights = _nu_discretization(sigma, q.hermite_nodes)
    return backend.kernels().stieltjes_sum(
        np.ascontiguousarray(vals, dtype=float), np.ascontiguousarray(weights, dtype=float), z
    )


# ---------------------------------------------------------------------------
# Effective signal eigenvalue and detection threshold
# ---------------------------------------------------------------------------

class _SignalMomentEquation:
    """Evaluator of the two-dimensional expectation behind the theta equation.

    For fixed (sigma, model, beta) the nonlinearity values are independent of
    theta, so they are precomputed once and every theta evaluation is a single
    reciprocal-moment kernel call.  The right-hand moment uses the same
    discretization of eta as the left-hand side, which keeps the zero
    nonlinearity case exact at any node count.
    """

    def __init__(self, sigma: SigmaSpec, model: ModelSpec, beta: float, q: QuadratureConfig, n_nodes: int):
        y, wy = model.eta.quadrature(q.eta_nodes)
        shifts = (model.m1 / model.m2) * beta * y
        coeff = wy * y * y
        self.target = float(coeff.sum()) / beta
        if isinstance(sigma, Step):
            # all shifts share the step levels: collapse masses onto them
            base_vals = np.asarray(sigma.values, dtype=float) + sigma.shift
            mass = np.empty((y.size, base_vals.size))
            for j, s in enumerate(shifts):
                mass[j] = _step_masses(sigma, float(s))[1]
            self.vals = base_vals
            self.weights = coeff @ mass
        elif isinstance(sigma, (Zero, Constant, ZShaped)):
            parts_v, parts_w = [], []
            for cj, s in zip(coeff, shifts):
                v, w = _sigma_gauss_nodes(sigma, float(s), n_nodes)
                parts_v.append(v)
                parts_w.append(cj * w)
            self.vals = np.ascontiguousarray(np.concatenate(parts_v))
            self.weights = np.ascontiguousarray(np.concatenate(parts_w))
        else:
            g, wg = _hermite(n_nodes)
            sig = _family_eval(sigma, shifts[:, None] + g[None, :]) + sigma.shift
            self.vals = np.ascontiguousarray(sig.ravel())
            self.weights = np.ascontiguousarray(np.outer(coeff, wg).ravel())

    def g(self, theta: float) -> float:
        return _inv_moment(self.vals, self.weights, theta, 1)


def _theta_solve_once(sigma: SigmaSpec, model: ModelSpec, beta: float, q: QuadratureConfig, n_nodes: int) -> float:
    _, hi_edge = sigma_edges(sigma)
    eq = _SignalMomentEquation(sigma, model, beta, q, n_nodes)
    lo = hi_edge + _EDGE_MARGIN
    if eq.g(lo) < eq.target:
        return hi_edge  # no solution above the edge
    hi = hi_edge + beta + 1.0
    for _ in range(60):
        if eq.g(hi) < eq.target:
            break
        hi = hi_edge + 2.0 * (hi - hi_edge)
    else:
        raise BracketError("theta bracket expansion failed", bracket=(lo, hi))
    while hi - lo > q.tol_root:
        mid = 0.5 * (lo + hi)
        if eq.g(mid) >= eq.target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _theta_core(sigma: SigmaSpec, model: ModelSpec, beta: float, q: QuadratureConfig) -> float:
    _, hi_edge = sigma_edges(sigma)
    n = q.hermite_nodes
    theta = _theta_solve_once(sigma, model, beta, q, n)
    if _quadrature_exact(sigma) or theta <= hi_edge + 2 * _EDGE_MARGIN or theta - hi_edge >= _NEAR_EDGE_GAP:
        return theta
    # near the singular regime: double the Gaussian nodes until roots agree
    for _ in range(_MAX_REFINE_DOUBLINGS):
        n *= 2
        refined = _theta_solve_once(sigma, model, beta, q, n)
        if abs(refined - theta) <= q.tol_root:
            return refined
        theta = refined
    return theta


def theta_sigma(sigma: SigmaSpec, model: ModelSpec, beta: float, q: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Limiting top eigenvalue of the signal part, theta(beta).

    Solves ``E[y^2 / (theta - sigma((m1/m2) beta y + g))] = m2 / beta`` for the
    unique root above the edge of sigma when one exists, and returns the edge
    otherwise.
    """
    if not beta > 0:
        raise InvalidParameterError(f"theta_sigma requires beta > 0, got {beta}")
    fam, c = _split_shift(sigma)
    return _theta_core(fam, model, beta, q) + c


def _beta_star_objective(fam: SigmaSpec, model: ModelSpec, beta: float, q: QuadratureConfig) -> float:
    _, hi_edge = sigma_edges(fam)
    theta = _theta_core(fam, model, beta, q)
    if theta <= hi_edge + 2 * _EDGE_MARGIN:
        return np.inf
    return gauss_expect_inverse(fam, theta, 0.0, 2, q) - 1.0


def _beta_star_core(fam: SigmaSpec, model: ModelSpec, q: QuadratureConfig) -> float:
    lo, hi = 1e-3, 4.0
    for _ in range(20):
        if _beta_star_objective(fam, model, lo, q) > 0:
            break
        lo /= 4.0
    else:
        raise BracketError("beta* lower bracket failed", bracket=(lo, hi))
    for _ in range(12):
        if _beta_star_objective(fam, model, hi, q) < 0:
            break
        hi *= 2.0
    else:
        raise BracketError("beta* upper bracket failed", bracket=(lo, hi))
    while hi - lo > q.tol_root:
        mid = 0.5 * (lo + hi)
        if _beta_star_objective(fam, model, mid, q) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def beta_star(sigma: SigmaSpec, model: ModelSpec, q: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Critical signal strength: the root of E[(theta(b) - sigma(g))^-2] = 1.

    Above this value the deformed observation matrix exhibits an outlier
    eigenvalue; below it the top eigenvalue sticks to the bulk edge.  The
    objective is decreasing in beta, so the root is found by bracketed
    bisection.  Vertical shifts of sigma leave the result unchanged.
    """
    fam, _ = _split_shift(sigma)
    return _beta_star_core(fam, model, q)


# ---------------------------------------------------------------------------
# Bulk edge, outlier location, density
# ---------------------------------------------------------------------------

def _free_conv_edge_core(fam: SigmaSpec, q: QuadratureConfig) -> float:
    _, hi_edge = sigma_edges(fam)

    def h_prime(u: float) -> float:
        return 1.0 - gauss_expect_inverse(fam, u, 0.0, 2, q)

    delta = 1e-3 * max(1.0, abs(hi_edge))
    while h_prime(hi_edge + delta) >= 0:
        delta /= 10.0
        if delta < 1e-13:
            # the pushforward's tail is so thin that the squared reciprocal
            # moment stays below 1 up to the edge: no stationary point, and
            # the support edge is the one-sided limit of u + G(u)
            u = hi_edge + _EDGE_MARGIN
            return u + gauss_expect_inverse(fam, u, 0.0, 1, q)
    lo = hi_edge + delta
    off = 1.0
    while h_prime(hi_edge + off) <= 0:
        off *= 2.0
        if off > 2.0**40:
            raise BracketError("H' upper bracket expansion failed", bracket=(lo, hi_edge + off))
    hi = hi_edge + off
    while hi - lo > q.tol_root:
        mid = 0.5 * (lo + hi)
        if h_prime(mid) < 0:
            lo = mid
        else:
            hi = mid
    u_star = 0.5 * (lo + hi)
    return u_star + gauss_expect_inverse(fam, u_star, 0.0, 1, q)


def free_conv_edge(sigma: SigmaSpec, q: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Right support edge of mu_sc (+) sigma(N(0,1)).

    Located as H(u*) where u* is the stationary point of H(z) = z + G_nu(z)
    above the range of sigma (H' is increasing there and tends to 1).
    """
    fam, c = _split_shift(sigma)
    return _free_conv_edge_core(fam, q) + c


def predicted_lambda1(
    sigma: SigmaSpec, model: ModelSpec, beta: float, q: QuadratureConfig = DEFAULT_QUADRATURE
) -> TheoryResult:
    """Full prediction set for the compressed deformed matrix at signal strength beta.

    Above the threshold the top eigenvalue converges to H(theta(beta)); at or
    below it, to the bulk edge.
    """
    if beta < 0:
        raise InvalidParameterError(f"beta must be >= 0, got {beta}")
    fam, c = _split_shift(sigma)
    _, hi_edge = sigma_edges(fam)
    bstar = _beta_star_core(fam, model, q)
    edge0 = _free_conv_edge_core(fam, q)
    theta0 = _theta_core(fam, model, beta, q) if beta > 0 else hi_edge
    if beta > bstar:
        pred0 = theta0 + gauss_expect_inverse(fam, theta0, 0.0, 1, q)
    else:
        pred0 = edge0
    return TheoryResult(
        theta=theta0 + c,
        beta_star=bstar,
        lambda1_predicted=pred0 + c,
        bulk_edge_plus=edge0 + c,
        has_outlier=bool(beta > bstar),
    )


def _g_semicircle(w: np.ndarray) -> np.ndarray:
    """Stieltjes transform of the semicircle law, branch with Im G < 0 on C+."""
    w = np.asarray(w, dtype=complex)
    return (w - np.sqrt(w - 2.0) * np.sqrt(w + 2.0)) / 2.0


def free_conv_density(
    sigma: SigmaSpec, grid: np.ndarray, q: QuadratureConfig = DEFAULT_QUADRATURE
) -> DensityResult:
    """Density of mu_sc (+) sigma(N(0,1)) on a real grid via Stieltjes inversion.

    Solves the subordination fixed point G = G_nu(z - G) at z = x + i*eps with
    damped iteration per grid point, then reads off -Im(G)/pi.  Non-convergent
    points are flagged, not fatal; their last iterate is still reported.
    """
    grid = np.ascontiguousarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidParameterError("grid must be a nonempty 1-d array")
    vals, weights = _nu_discretization(sigma, q.hermite_nodes)
    mean_nu = float(np.dot(vals, weights))
    g0 = _g_semicircle(grid + 1j * q.inversion_epsilon - mean_nu)
    g, converged, iters = backend.kernels().fixed_point_grid(
        np.ascontiguousarray(vals, dtype=float),
        np.ascontiguousarray(weights, dtype=float),
        grid,
        float(q.inversion_epsilon),
        float(q.damping),
        float(q.tol_fixed_point),
        int(q.max_fixed_point_iters),
        np.ascontiguousarray(g0, dtype=complex),
    )
    return DensityResult(
        x=grid, density=-np.imag(g) / np.pi, converged=converged, iterations=iters, stieltjes=g
    )


# ---------------------------------------------------------------------------
# Dense-signal heuristic (experimental)
# ---------------------------------------------------------------------------

class _DenseMomentEquation:
    """2-d Gaussian discretization of the dense-signal equations at strength b."""

    def __init__(self, fam: SigmaSpec, b: float, q: QuadratureConfig):
        g, wg = _hermite(q.hermite_nodes)
        h, wh = _hermite(q.hermite_nodes)
        args = b * np.sqrt(2.0 / np.pi) * np.abs(g)[:, None] + h[None, :]
        sig = _family_eval(fam, args) + fam.shift
        self.vals = np.ascontiguousarray(sig.ravel())
        w = np.outer(wg, wh)
        self.w_plain = np.ascontiguousarray(w.ravel())
        self.w_gsq = np.ascontiguousarray((w * (g * g)[:, None]).ravel())
        self.gsq_total = float(self.w_gsq.sum())


def _dense_theta(fam: SigmaSpec, b: float, q: QuadratureConfig) -> tuple[float, "_DenseMomentEquation"]:
    _, hi_edge = sigma_edges(fam)
    eq = _DenseMomentEquation(fam, b, q)
    if b == 0:
        return hi_edge, eq
    target = eq.gsq_total / b

    def g_of(theta: float) -> float:
        return _inv_moment(eq.vals, eq.w_gsq, theta, 1)

    lo = hi_edge + _EDGE_MARGIN
    if g_of(lo) < target:
        return hi_edge, eq
    hi = hi_edge + b + 1.0
    for _ in range(60):
        if g_of(hi) < target:
            break
        hi = hi_edge + 2.0 * (hi - hi_edge)
    else:
        raise BracketError("dense theta bracket expansion failed", bracket=(lo, hi))
    while hi - lo > q.tol_root:
        mid = 0.5 * (lo + hi)
        if g_of(mid) >= target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), eq


def dense_theta_beta_star(
    sigma: SigmaSpec, beta: float, q: QuadratureConfig = DEFAULT_QUADRATURE
) -> tuple[float, float]:
    """Heuristic analogues of (theta, beta*) for unsparsified half-normal signals.

    Experimental: the pushforward law here depends on the signal strength, and
    the transfer of the sparse-regime analysis to this setting is conjectural.
    """
    if beta < 0:
        raise InvalidParameterError(f"beta must be >= 0, got {beta}")
    fam, c = _split_shift(sigma)
    _, hi_edge = sigma_edges(fam)

    def objective(b: float) -> float:
        theta, eq = _dense_theta(fam, b, q)
        if theta <= hi_edge + 2 * _EDGE_MARGIN:
            return np.inf
        return _inv_moment(eq.vals, eq.w_plain, theta, 2) - 1.0

    lo, hi = 1e-3, 4.0
    for _ in range(20):
        if objective(lo) > 0:
            break
        lo /= 4.0
    else:
        raise BracketError("dense beta* lower bracket failed", bracket=(lo, hi))
    for _ in range(12):
        if objective(hi) < 0:
            break
        hi *= 2.0
    else:
        raise BracketError("dense beta* upper bracket failed", bracket=(lo, hi))
    while hi - lo > q.tol_root:
        mid = 0.5 * (lo + hi)
        if objective(mid) > 0:
            lo = mid
        else:
            hi = mid
    bstar = 0.5 * (lo + hi)
    theta, _ = _dense_theta(fam, beta, q)
    return theta + c, bstar
