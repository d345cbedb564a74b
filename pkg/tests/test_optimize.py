import numpy as np
import pytest

import nlspectra as nl
from nlspectra.errors import InvalidParameterError
from nlspectra.optimize import (
    HeatmapResult,
    OptimizeConfig,
    heatmap_sweep,
    nelder_mead,
    optimize_family,
    sigma_from_params,
)

M_DELTA = nl.ModelSpec(eta=nl.POINT_MASS_1, p=0.05, beta=1.0)


class TestNelderMead:
    def test_quadratic_bowl(self):
        res = nelder_mead(lambda p: (p[0] - 3.0) ** 2, OptimizeConfig(initial_point=(0.0,), max_evals=500))
        assert res.best_params[0] == pytest.approx(3.0, abs=1e-4)

    def test_rosenbrock(self):
        rosen = lambda p: (1 - p[0]) ** 2 + 100.0 * (p[1] - p[0] ** 2) ** 2
        res = nelder_mead(rosen, OptimizeConfig(initial_point=(-1.2, 1.0), max_evals=5000))
        assert res.best_value < 1e-6

    def test_constant_objective_stops_early(self):
        res = nelder_mead(lambda p: 7.0, OptimizeConfig(initial_point=(1.0, 2.0), max_evals=500))
        assert res.best_value == 7.0
        assert np.array_equal(res.best_params, [1.0, 2.0])
        assert res.eval_count < 20

    def test_eval_budget_respected(self):
        res = nelder_mead(lambda p: np.sum(p**2), OptimizeConfig(initial_point=(5.0, 5.0, 5.0), max_evals=25))
        assert res.eval_count <= 25 + 5  # an in-flight iteration may finish its sweep

    def test_penalty_values_tolerated(self):
        def objective(p):
            return np.inf if p[0] < 0 else (p[0] - 1.0) ** 2

        res = nelder_mead(objective, OptimizeConfig(initial_point=(0.5,), max_evals=300))
        assert res.best_params[0] == pytest.approx(1.0, abs=1e-4)

    def test_all_infeasible_start_rejected(self):
        with pytest.raises(InvalidParameterError):
            nelder_mead(lambda p: np.inf, OptimizeConfig(initial_point=(0.0,), max_evals=10))

    def test_deterministic(self):
        rosen = lambda p: (1 - p[0]) ** 2 + 100.0 * (p[1] - p[0] ** 2) ** 2
        cfg = OptimizeConfig(initial_point=(-1.2, 1.0), max_evals=431)
        a = nelder_mead(rosen, cfg)
        b = nelder_mead(rosen, cfg)
        assert np.array_equal(a.best_params, b.best_params)
        assert a.best_value == b.best_value and a.eval_count == b.eval_count

    def test_explicit_simplex(self):
        simplex = ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))
        res = nelder_mead(lambda p: np.sum((p - 0.3) ** 2), OptimizeConfig(initial_simplex=simplex, max_evals=400))
        assert np.allclose(res.best_params, 0.3, atol=1e-4)


class TestParameterMaps:
    def test_tanh_feasible(self):
        assert sigma_from_params("tanh", np.array([1.0, 0.5])) == nl.Tanh(1.0, 0.5)
        assert sigma_from_params("tanh", np.array([-0.1, 0.5])) is None

    def test_zshaped_feasible(self):
        assert sigma_from_params("z_shaped", np.array([1.0, 2.0, -0.5])) == nl.ZShaped(1.0, 2.0, -0.5)
        assert sigma_from_params("z_shaped", np.array([0.0, 2.0, -0.5])) is None

    def test_step_builds_monotone(self):
        params = np.array([-1.0, 0.5, 0.5, 0.2, 0.0, 0.3])
        sig = sigma_from_params("step", params)
        assert isinstance(sig, nl.Step)
        assert sig.knots == (-1.0, -0.5, 0.0)
        assert sig.values == (0.0, 0.2, 0.2, 0.5)
        assert sigma_from_params("step", np.array([-1.0, -0.5, 0.5, 0.2, 0.0, 0.3])) is None

    def test_unknown_family(self):
        with pytest.raises(InvalidParameterError):
            sigma_from_params("mystery", np.array([1.0]))


class TestOptimizeFamily:
    def test_tanh_reaches_known_optimum(self):
        sigma, value, evals = optimize_family("tanh", M_DELTA, OptimizeConfig(max_evals=300))
        assert value <= 0.765
        assert value == pytest.approx(0.755, abs=0.01)
        report = nl.validate_sigma(sigma)
        assert report.monotone

    def test_never_worse_than_zero_nonlinearity(self):
        _, value, _ = optimize_family("tanh", M_DELTA, OptimizeConfig(max_evals=150))
        assert value <= 1.0 + 1e-6

    def test_deterministic_with_restarts(self):
        cfg = OptimizeConfig(max_evals=60, restarts=2, seed=11)
        a = optimize_family("tanh", M_DELTA, cfg)
        b = optimize_family("tanh", M_DELTA, cfg)
        assert a[0] == b[0] and a[1] == b[1] and a[2] == b[2]

    def test_unknown_family(self):
        with pytest.raises(InvalidParameterError):
            optimize_family("mystery", M_DELTA)


class TestHeatmap:
    def test_degenerate_height_is_direct_threshold(self):
        res = heatmap_sweep(
            "z_shaped",
            M_DELTA,
            fixed={"b": 0.0},
            grid={"a": np.array([1.0, 2.0]), "c": np.array([-1.0])},
        )
        assert isinstance(res, HeatmapResult)
        assert res.values.shape == (1, 2)
        assert np.allclose(res.values, 1.0, atol=1e-6)

    def test_single_cell_matches_direct_evaluation(self):
        sig = nl.Tanh(1.7, 0.58)
        res = heatmap_sweep(
            "tanh", M_DELTA, fixed={}, grid={"a": np.array([1.7]), "b": np.array([0.58])}
        )
        assert res.values[0, 0] == pytest.approx(nl.beta_star(sig, M_DELTA), abs=1e-10)

    def test_requires_two_free_parameters(self):
        with pytest.raises(InvalidParameterError):
            heatmap_sweep("tanh", M_DELTA, fixed={"a": 1.0}, grid={"b": np.array([1.0])})

    def test_infeasible_cells_are_nan(self):
        res = heatmap_sweep(
            "z_shaped",
            M_DELTA,
            fixed={"b": 1.0},
            grid={"a": np.array([-1.0, 1.0]), "c": np.array([0.0])},
        )
        assert np.isnan(res.values[0, 0]) and np.isfinite(res.values[0, 1])
