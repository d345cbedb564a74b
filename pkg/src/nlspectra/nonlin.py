"""Parametric families of bounded monotone nonlinearities.

Every family evaluates pointwise (vectorized), knows its exact range
``(edge_minus, edge_plus)``, and carries an optional vertical ``shift``.
Shifts are kept as a separate field rather than folded into the family
parameters so that downstream consumers can factor them out analytically:
a vertical shift of the nonlinearity only translates spectra and leaves
detection thresholds unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True)
class Zero:
    shift: float = 0.0


@dataclass(frozen=True)
class Constant:
    c: float
    shift: float = 0.0


@dataclass(frozen=True)
class ZShaped:
    """Piecewise-linear ramp: 0 below ``c``, rising to ``b`` over a width-``a`` window."""

    a: float
    b: float
    c: float
    shift: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise InvalidParameterError(f"ZShaped width a must be > 0, got {self.a}")
        if self.b < 0:
            raise InvalidParameterError(f"ZShaped height b must be >= 0, got {self.b}")


@dataclass(frozen=True)
class Tanh:
    """Sigmoid family a * tanh(b x)."""

    a: float
    b: float
    shift: float = 0.0

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise InvalidParameterError(f"Tanh requires a >= 0 and b >= 0, got ({self.a}, {self.b})")


@dataclass(frozen=True)
class Step:
    """Right-continuous step function.

    ``values`` has one more entry than ``knots``: values[k] is taken on
    [knots[k-1], knots[k]), with values[0] to the left of the first knot.
    """

    knots: tuple[float, ...]
    values: tuple[float, ...]
    shift: float = 0.0

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if knots.size < 1:
            raise InvalidParameterError("Step needs at least one knot")
        if values.size != knots.size + 1:
            raise InvalidParameterError("Step needs len(values) == len(knots) + 1")
        if not np.all(np.diff(knots) > 0):
            raise InvalidParameterError("Step knots must be strictly increasing")
        if not np.all(np.diff(values) >= 0):
            raise InvalidParameterError("Step values must be non-decreasing")


@dataclass(frozen=True)
class Tabulated:
    """Linear interpolation on a grid, constant beyond the endpoints.

    Construction only checks the grid; monotonicity of the values table is
    the job of :func:`validate_sigma` so that bad tables can be diagnosed.
    """

    grid: tuple[float, ...]
    values: tuple[float, ...]
    shift: float = 0.0

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        if grid.size < 2 or len(self.values) != grid.size:
            raise InvalidParameterError("Tabulated needs a grid of >= 2 points matching values")
        if not np.all(np.diff(grid) > 0):
            raise InvalidParameterError("Tabulated grid must be strictly increasing")


SigmaSpec = Union[Zero, Constant, ZShaped, Tanh, Step, Tabulated]


def shifted(sigma: SigmaSpec, c: float) -> SigmaSpec:
    """The nonlinearity plus a vertical constant c."""
    return replace(sigma, shift=sigma.shift + c)


def _family_eval(sigma: SigmaSpec, x: np.ndarray) -> np.ndarray:
    """Evaluate the family part, excluding the vertical shift."""
    if isinstance(sigma, Zero):
        return np.zeros_like(x)
    if isinstance(sigma, Constant):
        return np.full_like(x, sigma.c)
    if isinstance(sigma, ZShaped):
        ramp = sigma.b * (x - sigma.c) / sigma.a
        return np.clip(ramp, 0.0, sigma.b)
    if isinstance(sigma, Tanh):
        return sigma.a * np.tanh(sigma.b * x)
    if isinstance(sigma, Step):
        idx = np.searchsorted(np.asarray(sigma.knots), x, side="right")
        return np.asarray(sigma.values, dtype=float)[idx]
    if isinstance(sigma, Tabulated):
        return np.interp(x, sigma.grid, sigma.values)
    raise TypeError(f"not a SigmaSpec: {type(sigma)!r}")


def eval_sigma(sigma: SigmaSpec, x) -> np.ndarray | float:
    """Pointwise evaluation; accepts scalars or arrays, total on finite inputs."""
    arr = np.asarray(x, dtype=float)
    out = _family_eval(sigma, arr) + sigma.shift
    if np.ndim(x) == 0:
        return float(out)
    return out


def sigma_edges(sigma: SigmaSpec) -> tuple[float, float]:
    """Exact (infimum, supremum) of the nonlinearity's range."""
    if isinstance(sigma, Zero):
        lo, hi = 0.0, 0.0
    elif isinstance(sigma, Constant):
        lo, hi = sigma.c, sigma.c
    elif isinstance(sigma, ZShaped):
        lo, hi = 0.0, sigma.b
    elif isinstance(sigma, Tanh):
        hi = sigma.a if sigma.b > 0 else 0.0
        lo = -hi
    elif isinstance(sigma, Step):
        lo, hi = min(sigma.values), max(sigma.values)
    elif isinstance(sigma, Tabulated):
        lo, hi = min(sigma.values), max(sigma.values)
    else:
        raise TypeError(f"not a SigmaSpec: {type(sigma)!r}")
    return lo + sigma.shift, hi + sigma.shift


@dataclass(frozen=True)
class ValidationReport:
    monotone: bool
    first_violation: tuple[int, int] | None
    bound: float
    lipschitz: float
    lipschitz_is_limit_case: bool  # True for step families (finite-grid estimate diverges)
    detected_shift: float  # c such that sigma - c has a symmetric range

    @property
    def ok(self) -> bool:
        return self.monotone


def validate_sigma(sigma: SigmaSpec, grid_halfwidth: float = 10.0, grid_points: int = 10_000) -> ValidationReport:
    """Check the monotone/bounded/Lipschitz assumptions on a grid.

    Monotonicity uses a 1e-9 slack.  The Lipschitz constant is the largest
    finite-difference slope on the grid; for step families it is reported as
    infinity and flagged as a limit case (an arbitrarily small smoothing
    restores the assumption without changing any threshold in this package).
    """
    if grid_points < 2:
        raise InvalidParameterError("grid_points must be >= 2")
    grid = np.linspace(-grid_halfwidth, grid_halfwidth, grid_points)
    vals = eval_sigma(sigma, grid)
    diffs = np.diff(vals)
    monotone = True
    first_violation = None
    if isinstance(sigma, Tabulated):
        # report violations against the table itself, not the sampling grid
        table_bad = np.flatnonzero(np.diff(np.asarray(sigma.values)) < -1e-9)
        if table_bad.size:
            monotone = False
            first_violation = (int(table_bad[0]), int(table_bad[0]) + 1)
    if monotone:
        bad = np.flatnonzero(diffs < -1e-9)
        if bad.size:
            monotone = False
            first_violation = (int(bad[0]), int(bad[0]) + 1)
    lo, hi = sigma_edges(sigma)
    bound = max(abs(lo), abs(hi))
    if isinstance(sigma, Step):
        lipschitz = np.inf
        limit_case = True
    else:
        h = grid[1] - grid[0]
        lipschitz = float(np.max(np.abs(diffs)) / h)
        limit_case = False
    return ValidationReport(
        monotone=monotone,
        first_violation=first_violation,
        bound=float(bound),
        lipschitz=lipschitz,
        lipschitz_is_limit_case=limit_case,
        detected_shift=(lo + hi) / 2.0,
    )


# ---------------------------------------------------------------------------
# JSON descriptors
# ---------------------------------------------------------------------------

_FAMILY_NAMES = {
    Zero: "zero",
    Constant: "constant",
    ZShaped: "z_shaped",
    Tanh: "tanh",
    Step: "step",
    Tabulated: "tabulated",
}


def sigma_to_json_obj(sigma: SigmaSpec) -> dict:
    params: dict = {}
    if isinstance(sigma, Constant):
        params = {"c": sigma.c}
    elif isinstance(sigma, ZShaped):
        params = {"a": sigma.a, "b": sigma.b, "c": sigma.c}
    elif isinstance(sigma, Tanh):
        params = {"a": sigma.a, "b": sigma.b}
    elif isinstance(sigma, Step):
        params = {"knots": list(sigma.knots), "values": list(sigma.values)}
    elif isinstance(sigma, Tabulated):
        params = {"grid": list(sigma.grid), "values": list(sigma.values)}
    obj = {"family": _FAMILY_NAMES[type(sigma)], "params": params}
    if sigma.shift != 0.0:
        obj["shift"] = sigma.shift
    return obj


def sigma_from_json_obj(obj: dict) -> SigmaSpec:
    family = obj["family"]
    params = obj.get("params", {})
    shift = float(obj.get("shift", 0.0))
    if family == "zero":
        return Zero(shift=shift)
    if family == "constant":
        return Constant(c=float(params["c"]), shift=shift)
    if family == "z_shaped":
        return ZShaped(a=float(params["a"]), b=float(params["b"]), c=float(params["c"]), shift=shift)
    if family == "tanh":
        return Tanh(a=float(params["a"]), b=float(params["b"]), shift=shift)
    if family == "step":
        return Step(knots=tuple(params["knots"]), values=tuple(params["values"]), shift=shift)
    if family == "tabulated":
        return Tabulated(grid=tuple(params["grid"]), values=tuple(params["values"]), shift=shift)
    raise InvalidParameterError(f"unknown sigma family: {family!r}")


def describe_sigma(sigma: SigmaSpec) -> str:
    """Compact single-token label, e.g. for table headers."""
    obj = sigma_to_json_obj(sigma)
    params = obj.get("params", {})
    inner = " ".join(
        f"{k}={v:g}" if isinstance(v, (int, float)) else f"{k}=<{len(v)}>" for k, v in params.items()
    )
    label = obj["family"] if not inner else f"{obj['family']}({inner})"
    if sigma.shift != 0.0:
        label += f"+{sigma.shift:g}"
    return label


def sigma_to_json(sigma: SigmaSpec) -> str:
    return json.dumps(sigma_to_json_obj(sigma), sort_keys=True)


def sigma_from_json(text: str) -> SigmaSpec:
    return sigma_from_json_obj(json.loads(text))
