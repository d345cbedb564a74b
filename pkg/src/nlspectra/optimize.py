"""Derivative-free minimization of the detection threshold over nonlinearity families.

The simplex method is implemented directly so the termination contract is
exact: stop when the simplex diameter falls below ``x_tol``, the value spread
falls below ``f_tol``, or the evaluation budget is exhausted, whichever comes
first.  Constraint handling is by penalty: parameter vectors outside a
family's feasible set map to +inf, which the simplex ordering handles
naturally.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .models import ModelSpec
from .nonlin import SigmaSpec, Step, Tanh, ZShaped
from .theory import DEFAULT_QUADRATURE, QuadratureConfig, beta_star

# reflect / expand / contract / shrink
_ALPHA, _GAMMA, _RHO, _SHRINK = 1.0, 2.0, 0.5, 0.5

_DEFAULT_STEP_KNOTS = 16


@dataclass(frozen=True)
class OptimizeConfig:
    family: str | None = None
    initial_point: tuple[float, ...] | None = None
    initial_simplex: tuple[tuple[float, ...], ...] | None = None
    max_evals: int = 2000
    f_tol: float = 1e-9
    x_tol: float = 1e-7
    restarts: int = 0
    seed: int = 0
    step_knots: int = _DEFAULT_STEP_KNOTS

    def __post_init__(self):
        if self.max_evals < 1:
            raise InvalidParameterError("max_evals must be >= 1")
        if self.f_tol <= 0 or self.x_tol <= 0:
            raise InvalidParameterError("tolerances must be > 0")


@dataclass
class NelderMeadResult:
    best_params: np.ndarray
    best_value: float
    eval_count: int


def _initial_simplex(x0: np.ndarray) -> np.ndarray:
    dim = x0.size
    simplex = np.tile(x0, (dim + 1, 1))
    for i in range(dim):
        step = 0.05 * abs(x0[i]) if x0[i] != 0 else 0.25
        simplex[i + 1, i] += step
    return simplex


def nelder_mead(objective, config: OptimizeConfig) -> NelderMeadResult:
    """Simplex minimization with coefficients (1, 2, 0.5, 0.5).

    ``objective`` maps a parameter vector to a float and may return +inf for
    infeasible points; it must be finite somewhere on the initial simplex.
    Deterministic given the config.
    """
    if config.initial_simplex is not None:
        simplex = np.array(config.initial_simplex, dtype=float)
        if simplex.shape[0] != simplex.shape[1] + 1:
            raise InvalidParameterError("initial_simplex must have dim+1 vertices")
    elif config.initial_point is not None:
        simplex = _initial_simplex(np.asarray(config.initial_point, dtype=float))
    else:
        raise InvalidParameterError("config needs initial_point or initial_simplex")

    evals = 0

    def f(x: np.ndarray) -> float:
        nonlocal evals
        evals += 1
        return float(objective(x))

    values = np.array([f(v) for v in simplex])
    if not np.any(np.isfinite(values)):
        raise InvalidParameterError("objective is non-finite at every initial simplex vertex")

    prev_spread = np.inf
    while evals < config.max_evals:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        reflected = centroid + _ALPHA * (centroid - worst)
        fr = f(reflected)
        if fr < values[0]:
            expanded = centroid + _GAMMA * (reflected - centroid)
            fe = f(expanded)
            if fe < fr:
                simplex[-1], values[-1] = expanded, fe
            else:
                simplex[-1], values[-1] = reflected, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = reflected, fr
        else:
            if fr < values[-1]:
                contracted = centroid + _RHO * (reflected - centroid)
            else:
                contracted = centroid + _RHO * (worst - centroid)
            fc = f(contracted)
            if fc < min(fr, values[-1]):
                simplex[-1], values[-1] = contracted, fc
            else:
                # shrink toward the best vertex
                for i in range(1, simplex.shape[0]):
                    simplex[i] = simplex[0] + _SHRINK * (simplex[i] - simplex[0])
                    values[i] = f(simplex[i])
                    if evals >= config.max_evals:
                        break

        # require two consecutive sub-tolerance value spreads: a symmetric
        # straddle of the optimum momentarily zeroes the spread, and one more
        # contraction resolves it
        spread = values.max() - values.min()
        if max(spread, prev_spread) < config.f_tol:
            break
        prev_spread = spread
        spans = np.abs(simplex - simplex[int(np.argmin(values))])
        if np.max(spans) < config.x_tol:
            break

    best = int(np.argmin(values))
    return NelderMeadResult(best_params=simplex[best].copy(), best_value=float(values[best]), eval_count=evals)


# ---------------------------------------------------------------------------
# Family parameterizations
# ---------------------------------------------------------------------------

def _tanh_from_params(params: np.ndarray) -> SigmaSpec | None:
    a, b = params
    if a < 0 or b < 0:
        return None
    return Tanh(float(a), float(b))


def _zshaped_from_params(params: np.ndarray) -> SigmaSpec | None:
    a, b, c = params
    if a <= 0 or b < 0:
        return None
    return ZShaped(float(a), float(b), float(c))


def _step_from_params(params: np.ndarray) -> SigmaSpec | None:
    m = params.size // 2
    widths, increments = params[:m], params[m:]
    if np.any(widths[1:] <= 0) or np.any(increments < 0):
        return None
    knots = np.cumsum(widths)
    if np.any(np.diff(knots) <= 0):  # widths can underflow to zero spacing
        return None
    values = np.concatenate(([0.0], np.cumsum(increments)))
    return Step(tuple(knots), tuple(values))


_FAMILY_BUILDERS = {
    "tanh": _tanh_from_params,
    "z_shaped": _zshaped_from_params,
    "step": _step_from_params,
}


def _default_start(family: str, step_knots: int) -> np.ndarray:
    if family == "tanh":
        return np.array([1.0, 0.5])
    if family == "z_shaped":
        return np.array([3.0, 2.0, -1.5])
    # staircase ramp over [-3.5, 3.5] rising to 3.4 (a generic saturating shape)
    m = step_knots
    widths = np.full(m, 7.0 / m)
    widths[0] = -3.5
    increments = np.full(m, 3.4 / m)
    return np.concatenate((widths, increments))


def sigma_from_params(family: str, params: np.ndarray) -> SigmaSpec | None:
    """Map an optimizer parameter vector to a nonlinearity, or None if infeasible."""
    if family not in _FAMILY_BUILDERS:
        raise InvalidParameterError(f"unknown family {family!r}; expected one of {sorted(_FAMILY_BUILDERS)}")
    return _FAMILY_BUILDERS[family](np.asarray(params, dtype=float))


def optimize_family(
    family: str,
    model: ModelSpec,
    config: OptimizeConfig | None = None,
    q: QuadratureConfig = DEFAULT_QUADRATURE,
) -> tuple[SigmaSpec, float, int]:
    """Minimize the detection threshold over a parametric family.

    Runs the simplex search from the configured start (plus ``restarts``
    jittered replicas, best-of) and returns ``(sigma, beta_star, evals)``.
    Infeasible parameter vectors are penalized with +inf, so every returned
    nonlinearity satisfies its family constraints by construction.
    """
    config = config or OptimizeConfig(family=family)
    if family not in _FAMILY_BUILDERS:
        raise InvalidParameterError(f"unknown family {family!r}; expected one of {sorted(_FAMILY_BUILDERS)}")

    def objective(params: np.ndarray) -> float:
        sigma = sigma_from_params(family, params)
        if sigma is None:
            return np.inf
        return beta_star(sigma, model, q)

    x0 = (
        np.asarray(config.initial_point, dtype=float)
        if config.initial_point is not None
        else _default_start(family, config.step_knots)
    )
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(config.seed))))
    starts = [x0]
    for _ in range(config.restarts):
        jitter = 1.0 + 0.25 * rng.standard_normal(x0.size)
        starts.append(x0 * jitter)

    best: NelderMeadResult | None = None
    total_evals = 0
    for start in starts:
        run_cfg = OptimizeConfig(
            family=family,
            initial_point=tuple(start),
            max_evals=config.max_evals,
            f_tol=config.f_tol,
            x_tol=config.x_tol,
            seed=config.seed,
            step_knots=config.step_knots,
        )
        result = nelder_mead(objective, run_cfg)
        total_evals += result.eval_count
        if best is None or result.best_value < best.best_value:
            best = result
    sigma = sigma_from_params(family, best.best_params)
    if sigma is None:
        raise InvalidParameterError("optimizer returned an infeasible parameter vector")
    return sigma, best.best_value, total_evals


def heatmap_sweep(
    family: str,
    model: ModelSpec,
    fixed: dict[str, float],
    grid: dict[str, np.ndarray],
    q: QuadratureConfig = DEFAULT_QUADRATURE,
) -> "HeatmapResult":
    """Threshold values over a 2-d slice of a family's parameter space.

    ``fixed`` pins all but exactly two parameters; ``grid`` supplies the value
    ranges of the two free ones.  Infeasible cells come back as NaN.
    """
    param_names = {"tanh": ["a", "b"], "z_shaped": ["a", "b", "c"]}.get(family)
    if param_names is None:
        raise InvalidParameterError(f"heatmap supports tanh and z_shaped families, not {family!r}")
    free = [name for name in param_names if name not in fixed]
    if len(free) != 2 or set(grid) != set(free):
        raise InvalidParameterError(f"exactly two free parameters required; free={free}, grid={sorted(grid)}")
    xname, yname = free
    xvals = np.asarray(grid[xname], dtype=float)
    yvals = np.asarray(grid[yname], dtype=float)
    values = np.full((yvals.size, xvals.size), np.nan)
    for i, yv in enumerate(yvals):
        for j, xv in enumerate(xvals):
            assignment = dict(fixed)
            assignment[xname] = float(xv)
            assignment[yname] = float(yv)
            params = np.array([assignment[name] for name in param_names])
            sigma = sigma_from_params(family, params)
            if sigma is None:
                continue
            values[i, j] = beta_star(sigma, model, q)
    return HeatmapResult(family=family, xname=xname, yname=yname, xvals=xvals, yvals=yvals, values=values)


@dataclass(frozen=True)
class HeatmapResult:
    family: str
    xname: str
    yname: str
    xvals: np.ndarray
    yvals: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)
