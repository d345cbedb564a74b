"""Compiled and pure-Python kernels must agree to rounding error."""

import numpy as np
import pytest

from nlspectra import backend
from nlspectra import _core_py

needs_compiled = pytest.mark.skipif(
    "compiled" not in backend.available_backends(), reason="extension not built"
)


@pytest.fixture
def compiled():
    from nlspectra import _core

    return _core


def _random_measure(seed, n=300):
    rng = np.random.default_rng(seed)
    vals = np.sort(rng.uniform(-1.5, 1.5, n))
    weights = rng.uniform(0, 1, n)
    weights /= weights.sum()
    return vals, weights


@needs_compiled
def test_inv_power_sum_matches(compiled):
    for seed in range(5):
        vals, weights = _random_measure(seed)
        for theta in (1.6, 2.0, 5.0):
            for power in (1, 2):
                a = compiled.inv_power_sum(vals, weights, theta, power)
                b = _core_py.inv_power_sum(vals, weights, theta, power)
                assert a == pytest.approx(b, rel=1e-13)


@needs_compiled
def test_stieltjes_sum_matches(compiled):
    vals, weights = _random_measure(7)
    for z in (2.5 + 0.0j, 0.3 + 1e-3j, -4.0 + 2.0j):
        a = compiled.stieltjes_sum(vals, weights, z)
        b = _core_py.stieltjes_sum(vals, weights, z)
        assert a == pytest.approx(b, rel=1e-12)


@needs_compiled
def test_fixed_point_grid_matches(compiled):
    vals, weights = _random_measure(11)
    xs = np.linspace(-3.0, 3.0, 41)
    g0 = np.full(xs.shape, -0.5j, dtype=complex)
    args = (vals, weights, xs, 1e-3, 0.5, 1e-9, 10_000, g0)
    ga, ca, ia = compiled.fixed_point_grid(*args)
    gb, cb, ib = _core_py.fixed_point_grid(*args)
    assert np.array_equal(ca, cb)
    assert np.allclose(ga, gb, atol=1e-8)


def test_backend_switching():
    original = backend.backend_name()
    try:
        backend.set_backend("python")
        assert backend.backend_name() == "python"
        assert backend.kernels() is _core_py
        if "compiled" in backend.available_backends():
            backend.set_backend("compiled")
            assert backend.backend_name() == "compiled"
    finally:
        backend.set_backend(original)
    with pytest.raises(ValueError):
        backend.set_backend("fortran")


def test_python_backend_runs_theory():
    import nlspectra as nl

    original = backend.backend_name()
    try:
        backend.set_backend("python")
        model = nl.ModelSpec(eta=nl.POINT_MASS_1, p=0.05, beta=1.0)
        assert nl.beta_star(nl.Zero(), model) == pytest.approx(1.0, abs=1e-6)
        res = nl.free_conv_density(nl.Zero(), np.array([0.0]))
        assert res.density[0] == pytest.approx(1 / np.pi, abs=1e-3)
    finally:
        backend.set_backend(original)
