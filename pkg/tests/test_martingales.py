import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from winmart import (
    TIME_CHANGES,
    PathEnsemble,
    TimeChange,
    aldous_sigma,
    aldous_spec,
    bass_sigma2,
    bass_transform,
    brownian_ensemble,
    make_grid,
    scaling_check,
    spec_from_id,
    time_change_spec,
)
from winmart.errors import ParameterError


def test_aldous_sigma_values():
    assert aldous_sigma(0.0, 0.5) == pytest.approx(1.0 / np.pi, abs=1e-12)
    assert aldous_sigma(0.75, 0.5) == pytest.approx(2.0 / np.pi, abs=1e-12)
    for t in (0.0, 0.3, 0.99):
        assert abs(aldous_sigma(t, 0.0)) < 1e-15


def test_aldous_sigma_domain_error():
    with pytest.raises(ParameterError):
        aldous_sigma(1.0, 0.5)


def test_scaling_check_constant_in_time():
    ts = np.array([0.0, 0.3, 0.9, 0.999])
    np.testing.assert_allclose(scaling_check(ts, 0.5), 1.0 / np.pi, atol=1e-12)
    np.testing.assert_allclose(
        scaling_check(ts, 0.25), np.sin(np.pi / 4) / np.pi, atol=1e-12
    )
    assert scaling_check(0.3, 0.25) == pytest.approx(0.2250791, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(t=st.floats(0.0, 1.0, exclude_max=True), x=st.floats(0.001, 0.999))
def test_scaling_check_property(t, x):
    assert scaling_check(t, x) == pytest.approx(scaling_check(0.0, x), abs=1e-12)


def test_bass_sigma2_values():
    assert bass_sigma2(0.0, 0.0) == pytest.approx(1.0 / (2 * np.pi), abs=1e-12)
    assert bass_sigma2(0.75, 0.0) == pytest.approx(1.0 / (2 * np.pi) / 0.25, abs=1e-12)
    assert bass_sigma2(0.3, 40.0) == 0.0  # Gaussian tail underflow
    with pytest.raises(ParameterError):
        bass_sigma2(1.0, 0.0)


def test_bass_transform_of_zero_path():
    grid = make_grid(0.0, 8, "uniform", 0.25)
    vals = np.zeros((4, grid.n_steps + 1))
    bm = PathEnsemble(grid=grid, values=vals, seed=1, terminal=vals[:, -1].copy(),
                      spec_id="brownian-var1", win=False)
    bass = bass_transform(bm)
    np.testing.assert_array_equal(bass.values, 0.5)


def test_bass_ensemble_statistics():
    grid = make_grid(0.0, 512, "geometric", 2.0**-16)
    bass = bass_transform(brownian_ensemble(grid, 20_000, seed=71))
    assert bass.values.min() >= 0.0 and bass.values.max() <= 1.0
    n = bass.n_paths
    means = bass.values.mean(axis=0)
    ses = bass.values.std(axis=0, ddof=1) / np.sqrt(n)
    assert (np.abs(means - 0.5) / np.maximum(ses, 1e-15)).max() < 3.0
    assert abs(bass.terminal.mean() - 0.5) < 3 * np.sqrt(0.25 / n)
    assert set(np.unique(bass.terminal)) <= {0.0, 1.0}


def test_bass_transform_rejects_win_ensemble():
    grid = make_grid(0.0, 16, "uniform", 0.5)
    from winmart import simulate_paths

    win = simulate_paths(aldous_spec(), grid, 0.5, 10, seed=2)
    with pytest.raises(ParameterError):
        bass_transform(win)


def test_identity_time_change_is_noop():
    tc = TimeChange(tau=lambda t: np.asarray(t, dtype=float),
                    tau_prime=lambda t: np.ones_like(np.asarray(t, dtype=float)),
                    name="identity")
    spec = time_change_spec(aldous_spec(), tc)
    ts = np.linspace(0.01, 0.95, 13)
    xs = np.linspace(0.05, 0.95, 13)
    np.testing.assert_allclose(spec.sigma(ts, xs), aldous_sigma(ts, xs), rtol=1e-14)


def test_time_change_quadratic_variation_density():
    # sigma_tc(t, x)^2 == sigma(tau(t), x)^2 * tau'(t)
    tc = TIME_CHANGES["square"]
    spec = time_change_spec(aldous_spec(), tc)
    for t in (0.1, 0.4, 0.8):
        for x in (0.2, 0.5, 0.9):
            expected = aldous_sigma(t * t, x) ** 2 * 2 * t
            assert spec.sigma(t, x) ** 2 == pytest.approx(expected, rel=1e-12)
    assert spec.separable is not None
    np.testing.assert_allclose(
        spec.separable.speed(0.4) * np.sin(np.pi * 0.3), spec.sigma(0.4, 0.3), rtol=1e-14
    )


def test_time_change_validation():
    with pytest.raises(ParameterError):
        TimeChange(tau=lambda t: np.asarray(t) * 0.5, tau_prime=lambda t: 0.5 * np.ones_like(np.asarray(t)), name="half")
    with pytest.raises(ParameterError):
        TimeChange(tau=lambda t: np.asarray(t), tau_prime=lambda t: -np.ones_like(np.asarray(t)), name="neg")


def test_spec_registry():
    assert spec_from_id("aldous").id == "aldous"
    assert spec_from_id("aldous-tc:square").id == "aldous-tc:square"
    with pytest.raises(ParameterError):
        spec_from_id("aldous-tc:unknown")
    with pytest.raises(ParameterError):
        spec_from_id("frobnicate")
