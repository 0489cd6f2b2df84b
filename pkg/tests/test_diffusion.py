import io

import numpy as np
import pytest

from winmart import (
    DiffusionSpec,
    aldous_sigma,
    aldous_spec,
    brownian_ensemble,
    interior_intervals,
    make_grid,
    realized_sigma2,
    simulate_paths,
)
from winmart.diffusion import write_paths_csv, write_terminal_csv
from winmart.errors import ParameterError


@pytest.fixture(scope="module")
def grid():
    return make_grid(0.0, 512, "geometric", 2.0**-16)


@pytest.fixture(scope="module")
def aldous_ens(grid):
    return simulate_paths(aldous_spec(), grid, 0.5, 20_000, seed=101)


def test_boundary_start_is_absorbing(grid):
    for x0 in (0.0, 1.0):
        ens = simulate_paths(aldous_spec(), grid, x0, 50, seed=3)
        assert (ens.values == x0).all()
        assert (ens.terminal == x0).all()


def test_martingale_property(aldous_ens):
    # ensemble mean equals x0 at every node within 3 standard errors
    n = aldous_ens.n_paths
    means = aldous_ens.values.mean(axis=0)
    ses = aldous_ens.values.std(axis=0, ddof=1) / np.sqrt(n)
    z = np.abs(means - 0.5) / np.maximum(ses, 1e-15)
    assert z.max() < 3.0


def test_range_and_absorption_invariants(aldous_ens):
    aldous_ens.validate(absorption=True)
    assert aldous_ens.values.min() >= 0.0
    assert aldous_ens.values.max() <= 1.0


def test_seed_determinism(grid):
    a = simulate_paths(aldous_spec(), grid, 0.5, 1500, seed=42)
    b = simulate_paths(aldous_spec(), grid, 0.5, 1500, seed=42)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.terminal, b.terminal)
    c = simulate_paths(aldous_spec(), grid, 0.5, 1500, seed=43)
    assert not np.array_equal(a.values, c.values)


def test_worker_count_invariance(grid):
    a = simulate_paths(aldous_spec(), grid, 0.5, 2500, seed=7, workers=None)
    b = simulate_paths(aldous_spec(), grid, 0.5, 2500, seed=7, workers=3)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.terminal, b.terminal)


def test_path_prefix_stability(grid):
    # per-path streams: a bigger run reproduces a smaller run's paths exactly
    small = simulate_paths(aldous_spec(), grid, 0.5, 1000, seed=9)
    big = simulate_paths(aldous_spec(), grid, 0.5, 1700, seed=9)
    assert np.array_equal(big.values[:1000], small.values)
    assert np.array_equal(big.terminal[:1000], small.terminal)


def test_terminal_law_bernoulli(grid):
    for x0, seed in ((0.25, 11), (0.5, 12), (0.75, 13)):
        ens = simulate_paths(aldous_spec(), grid, x0, 20_000, seed=seed)
        frac = ens.terminal.mean()
        assert abs(frac - x0) < 3 * np.sqrt(x0 * (1 - x0) / ens.n_paths)


def test_realized_sigma2_constant_path(grid):
    spec = DiffusionSpec(sigma=lambda t, x: 0.0 * np.asarray(x), id="flat")
    ens = simulate_paths(spec, grid, 0.5, 20, seed=5)
    np.testing.assert_array_equal(realized_sigma2(ens), 0.0)
    # a flat interior path is completed by a Bernoulli(0.5) draw
    assert set(np.unique(ens.terminal)) <= {0.0, 1.0}


def test_realized_sigma2_brownian_unit_vol(grid):
    bm = brownian_ensemble(grid, 4000, seed=21)
    s2 = realized_sigma2(bm)
    # E[(dB)^2] = dt: time-averaged mean near one
    tavg = (s2 * grid.dts).sum(axis=1) / grid.dts.sum()
    se = tavg.std(ddof=1) / np.sqrt(len(tavg))
    assert abs(tavg.mean() - 1.0) < 3 * se


def test_ito_isometry(aldous_ens):
    # mean integrated realized variance matches Var(M_last)
    s2 = realized_sigma2(aldous_ens)
    integ = (s2 * aldous_ens.grid.dts).sum(axis=1)
    var_last = aldous_ens.values[:, -1].var(ddof=1)
    se = integ.std(ddof=1) / np.sqrt(len(integ))
    assert abs(integ.mean() - var_last) < 3 * se


def test_realized_tracks_analytic_sigma2(aldous_ens):
    # per-interval realized means follow sigma^2(t_mid, M) along the paths
    grid = aldous_ens.grid
    s2 = realized_sigma2(aldous_ens)
    inside = interior_intervals(aldous_ens)
    analytic = aldous_sigma(grid.mid_times[None, :], aldous_ens.values[:, :-1]) ** 2
    sel = slice(10, 400)  # interior stretch of the grid
    r_mean = np.array([s2[inside[:, k], k].mean() for k in range(*sel.indices(grid.n_steps))])
    a_mean = np.array([analytic[inside[:, k], k].mean() for k in range(*sel.indices(grid.n_steps))])
    # chi-square(1) noise averages out across 2e4 paths; 5% agreement is ample
    assert np.abs(r_mean / a_mean - 1.0).max() < 0.05


def test_generic_sigma_matches_separable(grid):
    # a plain-python volatility equal to the fast-path formula reproduces it
    spec = aldous_spec()
    speed = spec.separable.speed

    def sigma(t, x):
        return speed(t) * np.sin(np.pi * x)

    generic = DiffusionSpec(sigma=sigma, id="aldous-generic")
    a = simulate_paths(spec, grid, 0.5, 500, seed=33, backend="reference")
    b = simulate_paths(generic, grid, 0.5, 500, seed=33, backend="reference")
    assert np.array_equal(a.values, b.values)


def test_spec_boundary_validation():
    with pytest.raises(ParameterError):
        DiffusionSpec(sigma=lambda t, x: np.ones_like(np.asarray(x, dtype=float)), id="bad")


def test_x0_validation(grid):
    with pytest.raises(ParameterError):
        simulate_paths(aldous_spec(), grid, 1.5, 10, seed=1)


def test_materialization_cap():
    grid = make_grid(0.0, 4096, "geometric")
    with pytest.raises(ParameterError):
        simulate_paths(aldous_spec(), grid, 0.5, 200_000, seed=1)


def test_csv_export(grid):
    ens = simulate_paths(aldous_spec(), grid, 0.5, 3, seed=8)
    buf = io.StringIO()
    write_paths_csv(ens, buf, config={"seed": 8})
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("# config:")
    assert lines[1] == "path,t,value"
    assert len(lines) == 2 + 3 * (grid.n_steps + 1)
    buf2 = io.StringIO()
    write_terminal_csv(ens, buf2)
    assert buf2.getvalue().splitlines()[0] == "path,terminal"
