import numpy as np
import pytest
from scipy import integrate

import nlspectra as nl
from nlspectra.errors import InvalidParameterError, SingularArgumentError
from nlspectra.theory import QuadratureConfig, _nu_discretization

M_DELTA = nl.ModelSpec(eta=nl.POINT_MASS_1, p=0.05, beta=1.0)
M_HALF = nl.ModelSpec(eta=nl.HALF_NORMAL, p=0.05, beta=1.0)
Q4 = QuadratureConfig(hermite_nodes=800, eta_nodes=1024)

# candidates spanning all families, used by the shift and regression suites
SIGMAS = [
    nl.Tanh(1.7, 0.58),
    nl.Tanh(0.9, 1.4),
    nl.ZShaped(2.0, 1.5, -1.0),
    nl.ZShaped(0.7, 3.0, 0.2),
    nl.Step(knots=(-1.0, 0.5, 2.0), values=(0.0, 0.4, 1.1, 2.0)),
    nl.Step(knots=(0.0,), values=(0.0, 1.0)),
    nl.Tabulated(grid=(-2.0, -1.0, 1.0, 2.0), values=(0.0, 0.2, 1.8, 2.0)),
    nl.Constant(0.7),
    nl.Zero(),
    nl.Tanh(2.4, 0.35),
]


def quad_oracle(sigma, theta, shift, power):
    """Brute-force adaptive quadrature of the reciprocal moment."""

    def integrand(g):
        return (theta - nl.eval_sigma(sigma, shift + g)) ** (-power) * np.exp(-g * g / 2) / np.sqrt(2 * np.pi)

    knots = []
    if isinstance(sigma, nl.Step):
        knots = [k - shift for k in sigma.knots]
    elif isinstance(sigma, nl.ZShaped):
        knots = [sigma.c - shift, sigma.a + sigma.c - shift]
    pts = sorted(p for p in knots if -12 < p < 12)
    val, _ = integrate.quad(integrand, -12, 12, points=pts or None, limit=400)
    return val


class TestGaussExpectInverse:
    def test_zero_sigma_closed_forms(self):
        assert nl.gauss_expect_inverse(nl.Zero(), 2.0, 0.0, 1) == pytest.approx(0.5, abs=1e-14)
        assert nl.gauss_expect_inverse(nl.Zero(), 1.0, 0.0, 2) == pytest.approx(1.0, abs=1e-14)

    def test_constant_shift_cancellation(self):
        c = 3.3
        assert nl.gauss_expect_inverse(nl.Constant(c), c + 2.0, 0.0, 1) == pytest.approx(0.5, abs=1e-14)

    def test_singular_argument_rejected(self):
        with pytest.raises(SingularArgumentError):
            nl.gauss_expect_inverse(nl.Tanh(1.0, 1.0), 0.5, 0.0, 1)
        with pytest.raises(SingularArgumentError):
            nl.gauss_expect_inverse(nl.Zero(), 0.0, 0.0, 2)

    @pytest.mark.parametrize("power", [1, 2])
    @pytest.mark.parametrize("shift", [0.0, 1.2])
    def test_against_adaptive_quadrature(self, power, shift):
        for sigma in [nl.Tanh(1.5, 0.7), nl.ZShaped(1.2, 2.0, -0.4),
                      nl.Step(knots=(-0.5, 1.0), values=(0.0, 0.8, 1.7))]:
            theta = nl.sigma_edges(sigma)[1] + 0.9
            ours = nl.gauss_expect_inverse(sigma, theta, shift, power)
            oracle = quad_oracle(sigma, theta, shift, power)
            assert ours == pytest.approx(oracle, rel=1e-9)

    def test_step_fast_path_near_edge(self):
        sigma = nl.Step(knots=(0.0,), values=(0.0, 1.0))
        theta = 1.0 + 1e-6
        ours = nl.gauss_expect_inverse(sigma, theta, 0.0, 2)
        # exact: 0.5/theta^2 + 0.5/(theta-1)^2
        assert ours == pytest.approx(0.5 / theta**2 + 0.5e12, rel=1e-9)


class TestStieltjes:
    def test_zero_sigma(self):
        assert nl.stieltjes_pushforward(nl.Zero(), 2.0) == pytest.approx(0.5)
        assert nl.stieltjes_pushforward(nl.Zero(), 1j) == pytest.approx(-1j)

    def test_inside_support_rejected(self):
        with pytest.raises(SingularArgumentError):
            nl.stieltjes_pushforward(nl.Tanh(1.0, 1.0), 0.3)

    def test_lower_half_plane_rejected(self):
        with pytest.raises(InvalidParameterError):
            nl.stieltjes_pushforward(nl.Zero(), -1j)

    def test_tanh_far_field(self):
        z = 5.0
        g = nl.stieltjes_pushforward(nl.Tanh(1.0, 1.0), z)
        # crude bound |G - 1/z| <= sup|sigma| / (z (z - sup|sigma|))
        assert abs(g - 1 / z) <= 1.0 / (z * (z - 1.0))
        g_fine = nl.stieltjes_pushforward(nl.Tanh(1.0, 1.0), z, QuadratureConfig(hermite_nodes=2000))
        assert abs(g - g_fine) < 1e-12

    def test_negative_imag_on_upper_half_plane(self):
        for sigma in SIGMAS[:6]:
            g = nl.stieltjes_pushforward(sigma, 0.5 + 0.01j)
            assert g.imag < 0


class TestThetaSigma:
    def test_zero_sigma_equals_beta(self):
        for model in (M_DELTA, M_HALF):
            assert nl.theta_sigma(nl.Zero(), model, 1.7) == pytest.approx(1.7, abs=1e-9)

    def test_constant_shifts(self):
        assert nl.theta_sigma(nl.Constant(2.5), M_DELTA, 1.7) == pytest.approx(4.2, abs=1e-9)

    def test_beta_zero_rejected(self):
        with pytest.raises(InvalidParameterError):
            nl.theta_sigma(nl.Zero(), M_DELTA, 0.0)

    def test_golden_tanh_submatrix(self):
        # frozen from an 800-node / 1024-eta-node run; node-count independent
        sig = nl.Tanh(1.72, 0.58)
        assert nl.theta_sigma(sig, M_DELTA, 1.2) == pytest.approx(2.296627202799251, abs=1e-9)

    def test_node_refinement_agrees(self):
        # half-normal eta uses quantile discretization; the residual bias at
        # default node counts is a few 1e-3, well inside experiment tolerances
        sig = nl.Tanh(1.3, 0.9)
        assert nl.theta_sigma(sig, M_HALF, 1.1) == pytest.approx(
            nl.theta_sigma(sig, M_HALF, 1.1, Q4), abs=5e-3
        )

    def test_monotone_in_beta(self):
        sig = nl.Tanh(1.7, 0.58)
        betas = np.linspace(0.05, 2.0, 20)
        thetas = [nl.theta_sigma(sig, M_DELTA, b) for b in betas]
        assert np.all(np.diff(thetas) >= -1e-9)
        above = [t for t in thetas if t > nl.sigma_edges(sig)[1] + 1e-6]
        assert np.all(np.diff(above) > 0)

    def test_small_beta_sticks_to_edge(self):
        sig = nl.Tanh(1.7, 0.58)
        assert nl.theta_sigma(sig, M_DELTA, 0.01) == nl.sigma_edges(sig)[1]


class TestBetaStar:
    def test_zero_sigma_is_one(self):
        for model in (M_DELTA, M_HALF):
            assert nl.beta_star(nl.Zero(), model) == pytest.approx(1.0, abs=1e-6)

    def test_constant_sigma_is_one(self):
        for c in (-1.0, 0.5, 3.0):
            assert nl.beta_star(nl.Constant(c), M_DELTA) == pytest.approx(1.0, abs=1e-6)

    def test_golden_tanh(self):
        assert nl.beta_star(nl.Tanh(1.72, 0.58), M_DELTA) == pytest.approx(0.7550186016378937, abs=1e-8)

    def test_step_fast_path_value(self):
        sig = nl.Step(knots=(-1.0, 0.0, 1.0), values=(0.0, 0.5, 1.0, 1.5))
        bs = nl.beta_star(sig, M_DELTA)
        assert 0.5 < bs < 1.0
        assert bs == pytest.approx(nl.beta_star(sig, M_DELTA, Q4), abs=1e-8)


class TestPredictedLambda1:
    def test_bbp_above_threshold(self):
        res = nl.predicted_lambda1(nl.Zero(), M_DELTA, 1.5)
        assert res.lambda1_predicted == pytest.approx(1.5 + 1 / 1.5, abs=1e-8)
        assert res.has_outlier and res.theta == pytest.approx(1.5, abs=1e-9)

    def test_bbp_below_threshold(self):
        res = nl.predicted_lambda1(nl.Zero(), M_DELTA, 0.5)
        assert res.lambda1_predicted == pytest.approx(2.0, abs=1e-8)
        assert not res.has_outlier

    def test_constant_sigma_shifted_bbp(self):
        c = 0.9
        above = nl.predicted_lambda1(nl.Constant(c), M_DELTA, 1.5)
        assert above.lambda1_predicted == pytest.approx(c + 1.5 + 1 / 1.5, abs=1e-7)
        below = nl.predicted_lambda1(nl.Constant(c), M_DELTA, 0.5)
        assert below.lambda1_predicted == pytest.approx(c + 2.0, abs=1e-7)

    def test_bbp_consistency_grid(self):
        for beta in np.linspace(1.05, 3.0, 12):
            res = nl.predicted_lambda1(nl.Zero(), M_DELTA, beta)
            assert res.lambda1_predicted == pytest.approx(beta + 1 / beta, abs=1e-8)

    def test_result_invariants(self):
        sig = nl.Tanh(1.7, 0.58)
        for beta in (0.3, 0.9, 1.4):
            res = nl.predicted_lambda1(sig, M_DELTA, beta)
            assert res.theta >= nl.sigma_edges(sig)[1] - 1e-12
            assert res.has_outlier == (beta > res.beta_star)
            if res.has_outlier:
                assert res.lambda1_predicted > res.bulk_edge_plus
            else:
                assert res.lambda1_predicted == res.bulk_edge_plus

    def test_threshold_edge_coherence(self):
        sig = nl.Tanh(1.7, 0.58)
        bstar = nl.beta_star(sig, M_DELTA)
        above = nl.predicted_lambda1(sig, M_DELTA, bstar + 1e-3)
        assert 0.0 < above.lambda1_predicted - above.bulk_edge_plus < 0.05
        below = nl.predicted_lambda1(sig, M_DELTA, bstar - 1e-3)
        assert below.lambda1_predicted == below.bulk_edge_plus


class TestFreeConvDensity:
    def test_semicircle_center(self):
        res = nl.free_conv_density(nl.Zero(), np.array([0.0]))
        assert res.density[0] == pytest.approx(1 / np.pi, abs=1e-3)

    def test_outside_support_near_zero(self):
        res = nl.free_conv_density(nl.Zero(), np.array([-3.0, 3.0]))
        assert np.all(np.abs(res.density) < 5e-3)

    def test_normalization_tanh(self):
        grid = np.linspace(-4.5, 4.5, 600)
        res = nl.free_conv_density(nl.Tanh(1.7, 0.58), grid)
        total = np.trapezoid(res.density, grid)
        assert total == pytest.approx(1.0, abs=0.01)

    def test_density_nonnegative(self):
        grid = np.linspace(-5.0, 5.0, 300)
        for sigma in (nl.Zero(), nl.Tanh(1.0, 1.0), nl.Step((0.0,), (0.0, 1.0))):
            res = nl.free_conv_density(sigma, grid)
            assert np.all(res.density >= -1e-6)

    def test_fixed_point_residual(self):
        from nlspectra import backend

        q = nl.DEFAULT_QUADRATURE
        sigma = nl.Tanh(1.2, 0.8)
        grid = np.linspace(-3.0, 3.0, 50)
        res = nl.free_conv_density(sigma, grid, q)
        vals, weights = _nu_discretization(sigma, q.hermite_nodes)
        for x, g, ok in zip(res.x, res.stieltjes, res.converged):
            if not ok:
                continue
            z = x + 1j * q.inversion_epsilon
            gnu = backend.kernels().stieltjes_sum(vals, weights, z - g)
            assert abs(gnu - g) <= q.tol_fixed_point

    def test_flags_survive_hard_points(self):
        # right at the semicircle edge convergence is slowest; flags, not errors
        res = nl.free_conv_density(nl.Zero(), np.array([2.0]), QuadratureConfig(max_fixed_point_iters=10))
        assert res.converged.dtype == bool


class TestFreeConvEdge:
    def test_semicircle(self):
        assert nl.free_conv_edge(nl.Zero()) == pytest.approx(2.0, abs=1e-6)

    def test_constant_shift(self):
        assert nl.free_conv_edge(nl.Constant(1.5)) == pytest.approx(3.5, abs=1e-6)

    def test_against_density_support(self):
        sig = nl.Tanh(1.7, 0.58)
        edge = nl.free_conv_edge(sig)
        grid = np.linspace(0.0, 5.0, 500)
        res = nl.free_conv_density(sig, grid)
        support = grid[res.density > 1e-3]
        assert abs(support.max() - edge) < 0.05


class TestDenseHeuristic:
    def test_zero_sigma_collapses(self):
        theta, bstar = nl.dense_theta_beta_star(nl.Zero(), 1.3)
        assert theta == pytest.approx(1.3, abs=1e-8)
        assert bstar == pytest.approx(1.0, abs=1e-6)

    def test_constant_sigma_shifts(self):
        theta, bstar = nl.dense_theta_beta_star(nl.Constant(0.8), 1.3)
        assert theta == pytest.approx(2.1, abs=1e-8)
        assert bstar == pytest.approx(1.0, abs=1e-6)

    def test_tanh_regression(self):
        # frozen from an 800-node run
        theta, bstar = nl.dense_theta_beta_star(nl.Tanh(1.0, 1.0), 1.0)
        assert theta == pytest.approx(1.7600135509362098, abs=2e-3)
        assert bstar == pytest.approx(0.8974293961055884, abs=2e-3)


class TestShiftInvariance:
    @pytest.mark.parametrize("c", [-1.0, 0.5, 3.0])
    def test_suite(self, c):
        for sigma in SIGMAS:
            shifted = nl.shifted(sigma, c)
            assert nl.beta_star(shifted, M_DELTA) == pytest.approx(nl.beta_star(sigma, M_DELTA), abs=1e-8)
            t0 = nl.theta_sigma(sigma, M_DELTA, 1.4)
            t1 = nl.theta_sigma(shifted, M_DELTA, 1.4)
            assert t1 == pytest.approx(t0 + c, abs=1e-8)
            p0 = nl.predicted_lambda1(sigma, M_DELTA, 1.4)
            p1 = nl.predicted_lambda1(shifted, M_DELTA, 1.4)
            assert p1.lambda1_predicted == p0.lambda1_predicted + c
            assert p1.bulk_edge_plus == p0.bulk_edge_plus + c


class TestQuadratureConfig:
    def test_validation(self):
        with pytest.raises(InvalidParameterError):
            QuadratureConfig(hermite_nodes=4)
        with pytest.raises(InvalidParameterError):
            QuadratureConfig(tol_root=0.0)
        with pytest.raises(InvalidParameterError):
            QuadratureConfig(damping=1.5)
