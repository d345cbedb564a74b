"""Monte Carlo harness: phase-transition sweeps, spectrum histograms with
analytic overlays, detection error rates, and threshold transfer tables.

Every run is a pure function of its config.  Per-trial seeds are derived from
the master seed and the (beta index, trial index) cell, so results do not
depend on scheduling; trials may run on a thread pool (the eigensolvers
release the GIL) and are reassembled in index order, keeping output
byte-identical across worker counts.
"""

from __future__ import annotations

import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import InvalidParameterError
from .laplacian import build_compressed, build_laplacian, compress_vector, ones_complement_basis
from .models import Instance, ModelSpec, derive_seed, sample_observation
from .nonlin import SigmaSpec, describe_sigma
from .spectra import max_row_statistic, overlap
from .theory import DEFAULT_QUADRATURE, QuadratureConfig, beta_star, free_conv_density, predicted_lambda1

ALL_STATISTICS = ("lambda1_L", "lambda1_Y", "overlap", "max_row")


@dataclass(frozen=True)
class SweepConfig:
    """Monte Carlo sweep over a grid of signal strengths.

    ``p_rule`` resolves the sparsity level per grid point: "fixed" keeps the
    template's p, "submatrix" couples it as beta / sqrt(n) (the planted
    submatrix scaling).
    """

    model: ModelSpec
    sigma: SigmaSpec
    n: int
    beta_grid: tuple[float, ...]
    trials: int
    seed: int
    use_compressed: bool = True
    statistics: tuple[str, ...] = ("lambda1_L", "overlap")
    p_rule: str = "fixed"
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidParameterError("trials must be >= 1")
        if len(self.beta_grid) == 0:
            raise InvalidParameterError("beta_grid must be nonempty")
        unknown = set(self.statistics) - set(ALL_STATISTICS)
        if unknown:
            raise InvalidParameterError(f"unknown statistics: {sorted(unknown)}")
        if self.p_rule not in ("fixed", "submatrix"):
            raise InvalidParameterError(f"p_rule must be 'fixed' or 'submatrix', got {self.p_rule!r}")


@dataclass
class SweepResult:
    beta: np.ndarray
    means: dict[str, np.ndarray]
    stds: dict[str, np.ndarray]
    trials: int
    theory_lambda1: np.ndarray
    theory_beta_star: float
    theory_bulk_edge: float
    meta: dict = field(default_factory=dict)

    def csv_header(self) -> list[str]:
        cols = ["beta"]
        for name in self.means:
            cols += [f"{name}_mean", f"{name}_std"]
        cols += ["theory_lambda1", "theory_beta_star", "theory_bulk_edge", "trials"]
        return cols

    def csv_rows(self):
        for i, b in enumerate(self.beta):
            row = [b]
            for name in self.means:
                row += [self.means[name][i], self.stds[name][i]]
            row += [self.theory_lambda1[i], self.theory_beta_star, self.theory_bulk_edge, self.trials]
            yield row

    def to_json_obj(self) -> dict:
        return {
            "meta": self.meta,
            "beta": list(map(float, self.beta)),
            "means": {k: list(map(float, v)) for k, v in self.means.items()},
            "stds": {k: list(map(float, v)) for k, v in self.stds.items()},
            "trials": self.trials,
            "theory_lambda1": list(map(float, self.theory_lambda1)),
            "theory_beta_star": float(self.theory_beta_star),
            "theory_bulk_edge": float(self.theory_bulk_edge),
        }


def resolve_model(template: ModelSpec, beta: float, n: int, p_rule: str) -> ModelSpec:
    """Instantiate the sweep's model template at a particular signal strength."""
    if p_rule == "submatrix":
        p = min(beta / np.sqrt(n), 1.0) if beta > 0 else 1.0 / n
        return ModelSpec(eta=template.eta, p=p, sparsity_mode=template.sparsity_mode, beta=beta)
    return template.with_beta(beta)


def _trial_statistics(inst: Instance, sigma: SigmaSpec, config: SweepConfig) -> dict[str, float]:
    out: dict[str, float] = {}
    need_lap = "lambda1_L" in config.statistics or "overlap" in config.statistics
    if need_lap:
        if config.use_compressed:
            lap = build_compressed(inst.y_hat, sigma)
            x_ref = compress_vector(inst.x) if inst.x.any() else None
        else:
            lap = build_laplacian(inst.y_hat, sigma)
            x_ref = inst.x if inst.x.any() else None
        vals, vecs = np.linalg.eigh(lap)
        if "lambda1_L" in config.statistics:
            out["lambda1_L"] = float(vals[-1])
        if "overlap" in config.statistics:
            out["overlap"] = overlap(vecs[:, -1], x_ref) if x_ref is not None else np.nan
    if "lambda1_Y" in config.statistics:
        out["lambda1_Y"] = float(np.linalg.eigvalsh(inst.y_hat)[-1])
    if "max_row" in config.statistics:
        out["max_row"] = max_row_statistic(inst.y_hat)
    return out


def run_phase_sweep(config: SweepConfig, q: QuadratureConfig = DEFAULT_QUADRATURE) -> SweepResult:
    """Sample trials at each grid point and attach the analytic overlay."""
    if config.use_compressed:
        ones_complement_basis(config.n)  # warm the cached basis before threading

    def run_cell(bi: int, trial: int) -> dict[str, float]:
        beta = config.beta_grid[bi]
        model = resolve_model(config.model, beta, config.n, config.p_rule)
        seed = derive_seed(config.seed, bi, trial)
        try:
            inst = sample_observation(model, config.n, seed)
            return _trial_statistics(inst, config.sigma, config)
        except Exception as exc:
            raise RuntimeError(f"trial failed at beta={beta} (index {bi}), trial {trial}: {exc}") from exc

    cells = [(bi, t) for bi in range(len(config.beta_grid)) for t in range(config.trials)]
    # BLAS pinned to one thread per call: eigendecompositions then reduce in a
    # fixed order, so output is byte-identical for any worker count
    with threadpool_limits(limits=1):
        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                results = list(pool.map(lambda c: run_cell(*c), cells))
        else:
            results = [run_cell(*c) for c in cells]

    names = [s for s in ALL_STATISTICS if s in config.statistics]
    means = {name: np.empty(len(config.beta_grid)) for name in names}
    stds = {name: np.empty(len(config.beta_grid)) for name in names}
    for bi in range(len(config.beta_grid)):
        block = results[bi * config.trials : (bi + 1) * config.trials]
        for name in names:
            vals = np.array([r[name] for r in block])
            means[name][bi] = vals.mean()
            stds[name][bi] = vals.std(ddof=0)

    theory = [predicted_lambda1(config.sigma, config.model, b, q) for b in config.beta_grid]
    return SweepResult(
        beta=np.asarray(config.beta_grid, dtype=float),
        means=means,
        stds=stds,
        trials=config.trials,
        theory_lambda1=np.array([t.lambda1_predicted for t in theory]),
        theory_beta_star=theory[0].beta_star,
        theory_bulk_edge=theory[0].bulk_edge_plus,
    )


@dataclass
class SpectrumExperimentResult:
    bin_edges: np.ndarray
    hist_density: np.ndarray
    curve_x: np.ndarray
    curve_density: np.ndarray
    curve_converged: np.ndarray
    lambda1: float
    eigenvalues: np.ndarray
    meta: dict = field(default_factory=dict)

    def csv_header(self) -> list[str]:
        return ["bin_left", "bin_right", "hist_density", "curve_x", "curve_density"]

    def csv_rows(self):
        k = max(len(self.hist_density), len(self.curve_x))
        for i in range(k):
            yield [
                self.bin_edges[i] if i < len(self.hist_density) else np.nan,
                self.bin_edges[i + 1] if i < len(self.hist_density) else np.nan,
                self.hist_density[i] if i < len(self.hist_density) else np.nan,
                self.curve_x[i] if i < len(self.curve_x) else np.nan,
                self.curve_density[i] if i < len(self.curve_x) else np.nan,
            ]

    def to_json_obj(self) -> dict:
        return {
            "meta": self.meta,
            "lambda1": float(self.lambda1),
            "bin_edges": list(map(float, self.bin_edges)),
            "hist_density": list(map(float, self.hist_density)),
            "curve_x": list(map(float, self.curve_x)),
            "curve_density": list(map(float, self.curve_density)),
        }


def run_spectrum_experiment(
    model: ModelSpec,
    sigma: SigmaSpec,
    n: int,
    seed: int,
    bins: int = 60,
    q: QuadratureConfig = DEFAULT_QUADRATURE,
    curve_points: int = 256,
) -> SpectrumExperimentResult:
    """One instance: eigenvalue histogram of the compressed deformation with
    the analytic bulk density overlaid and the top eigenvalue marked."""
    inst = sample_observation(model, n, seed)
    lap = build_compressed(inst.y_hat, sigma)
    eigs = np.linalg.eigvalsh(lap)[::-1]
    lo, hi = eigs.min() - 0.25, eigs.max() + 0.25
    hist, edges = np.histogram(eigs, bins=bins, range=(lo, hi), density=True)
    grid = np.linspace(lo, hi, curve_points)
    dens = free_conv_density(sigma, grid, q)
    return SpectrumExperimentResult(
        bin_edges=edges,
        hist_density=hist,
        curve_x=grid,
        curve_density=dens.density,
        curve_converged=dens.converged,
        lambda1=float(eigs[0]),
        eigenvalues=eigs,
    )


@dataclass
class DetectionReport:
    tau: float
    statistic: str
    type_i: float
    type_ii: float
    null_stats: np.ndarray
    alt_stats: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def total_error(self) -> float:
        return self.type_i + self.type_ii

    def errors_at(self, tau: float) -> tuple[float, float]:
        """Re-threshold the recorded statistics without resampling."""
        return float(np.mean(self.null_stats >= tau)), float(np.mean(self.alt_stats < tau))

    def csv_header(self) -> list[str]:
        return ["trial", "null_stat", "alt_stat"]

    def csv_rows(self):
        for i, (a, b) in enumerate(zip(self.null_stats, self.alt_stats)):
            yield [i, a, b]

    def to_json_obj(self) -> dict:
        return {
            "meta": self.meta,
            "tau": float(self.tau),
            "statistic": self.statistic,
            "type_i": float(self.type_i),
            "type_ii": float(self.type_ii),
            "total_error": float(self.total_error),
            "null_stats": list(map(float, self.null_stats)),
            "alt_stats": list(map(float, self.alt_stats)),
        }


def run_detection(
    model: ModelSpec,
    sigma: SigmaSpec,
    n: int,
    tau: float,
    trials: int,
    seed: int,
    statistic: str = "lambda1_L",
    use_compressed: bool = True,
    workers: int = 1,
) -> DetectionReport:
    """Type-I / type-II error rates of a thresholding detector at level tau.

    Null (beta = 0) and alternative draws share per-trial noise sub-seeds, so
    each pair differs only by the planted signal.
    """
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    if statistic not in ("lambda1_L", "lambda1_Y", "max_row"):
        raise InvalidParameterError(f"unsupported detection statistic {statistic!r}")
    if model.beta <= 0:
        raise InvalidParameterError("detection needs an alternative with beta > 0")

    def stat_of(inst: Instance) -> float:
        if statistic == "max_row":
            return max_row_statistic(inst.y_hat)
        if statistic == "lambda1_Y":
            return float(np.linalg.eigvalsh(inst.y_hat)[-1])
        lap = build_compressed(inst.y_hat, sigma) if use_compressed else build_laplacian(inst.y_hat, sigma)
        return float(np.linalg.eigvalsh(lap)[-1])

    null_model = model.with_beta(0.0)

    def run_pair(t: int) -> tuple[float, float]:
        s = derive_seed(seed, t)
        return stat_of(sample_observation(null_model, n, s)), stat_of(sample_observation(model, n, s))

    with threadpool_limits(limits=1):
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                pairs = list(pool.map(run_pair, range(trials)))
        else:
            pairs = [run_pair(t) for t in range(trials)]
    null_stats = np.array([p[0] for p in pairs])
    alt_stats = np.array([p[1] for p in pairs])
    return DetectionReport(
        tau=float(tau),
        statistic=statistic,
        type_i=float(np.mean(null_stats >= tau)),
        type_ii=float(np.mean(alt_stats < tau)),
        null_stats=null_stats,
        alt_stats=alt_stats,
    )


@dataclass
class TableResult:
    """Generic tabular result for ad-hoc CSV/JSON emission (used by the CLI)."""

    header: list[str]
    rows: list[list]
    meta: dict = field(default_factory=dict)

    def csv_header(self) -> list[str]:
        return self.header

    def csv_rows(self):
        yield from self.rows

    def to_json_obj(self) -> dict:
        return {"meta": self.meta, "header": self.header, "rows": self.rows}


@dataclass
class TransferTable:
    sigma_labels: list[str]
    model_labels: list[str]
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def csv_header(self) -> list[str]:
        return ["sigma"] + list(self.model_labels)

    def csv_rows(self):
        for label, row in zip(self.sigma_labels, self.values):
            yield [label] + list(row)

    def to_json_obj(self) -> dict:
        return {
            "meta": self.meta,
            "sigma_labels": self.sigma_labels,
            "model_labels": self.model_labels,
            "values": [[float(v) for v in row] for row in self.values],
        }


def run_transfer_table(
    sigmas: list[SigmaSpec],
    models: list[ModelSpec],
    q: QuadratureConfig = DEFAULT_QUADRATURE,
    sigma_labels: list[str] | None = None,
    model_labels: list[str] | None = None,
) -> TransferTable:
    """Cross table of thresholds: how each nonlinearity fares on each model."""
    if not sigmas or not models:
        raise InvalidParameterError("need at least one sigma and one model")
    values = np.array([[beta_star(s, m, q) for m in models] for s in sigmas])
    return TransferTable(
        sigma_labels=sigma_labels or [describe_sigma(s) for s in sigmas],
        model_labels=model_labels or [m.eta.kind for m in models],
        values=values,
    )


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float) and not isinstance(value, bool):
        return format(value, ".17g")
    if isinstance(value, (np.floating,)):
        return format(float(value), ".17g")
    text = str(value)
    if "," in text or '"' in text:
        text = '"' + text.replace('"', '""') + '"'
    return text


def emit_results(result, path, format: str = "csv") -> None:
    """Write a result object to disk (or stdout for path "-"); byte-stable.

    CSV output carries the result's meta mapping as leading ``#`` comment
    lines, then a header row and 17-significant-digit floats.  JSON output is
    sorted-key with indentation.
    """
    if format not in ("csv", "json"):
        raise InvalidParameterError(f"format must be 'csv' or 'json', got {format!r}")
    try:
        if format == "json":
            text = json.dumps(result.to_json_obj(), sort_keys=True, indent=2) + "\n"
        else:
            lines = [f"# {k} = {v}" for k, v in sorted(getattr(result, "meta", {}).items())]
            lines.append(",".join(result.csv_header()))
            for row in result.csv_rows():
                lines.append(",".join(_fmt(v) for v in row))
            text = "\n".join(lines) + "\n"
        if path == "-":
            sys.stdout.write(text)
        else:
            with open(path, "w", encoding="utf-8") as f:
                f.write(text)
    except OSError as exc:
        raise OSError(f"failed to write results to {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Distribution comparison
# ---------------------------------------------------------------------------

def w1_sample_vs_density(
    samples: np.ndarray, grid: np.ndarray, density: np.ndarray, num_quantiles: int = 512
) -> float:
    """Wasserstein-1 distance between an empirical sample and a density curve,
    via matched quantiles.

    The curve is integrated by trapezoid into a CDF (renormalized, so modest
    truncation of the grid is tolerated) and inverted at midpoint quantile
    levels; the sample is quantiled at the same levels.
    """
    samples = np.sort(np.asarray(samples, dtype=float))
    grid = np.asarray(grid, dtype=float)
    density = np.clip(np.asarray(density, dtype=float), 0.0, None)
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(grid))))
    if cdf[-1] <= 0:
        raise InvalidParameterError("density integrates to zero on the grid")
    cdf /= cdf[-1]
    levels = (np.arange(num_quantiles) + 0.5) / num_quantiles
    q_curve = np.interp(levels, cdf, grid)
    q_sample = np.quantile(samples, levels)
    return float(np.mean(np.abs(q_curve - q_sample)))
