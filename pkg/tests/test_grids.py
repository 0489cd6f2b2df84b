import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from winmart import make_grid
from winmart.errors import ParameterError


def test_uniform_simple_partition():
    g = make_grid(0.0, 4, "uniform", 0.2)
    np.testing.assert_allclose(g.nodes, [0.0, 0.2, 0.4, 0.6, 0.8], atol=1e-15)


def test_uniform_late_start():
    g = make_grid(0.9, 2, "uniform", 0.05)
    np.testing.assert_allclose(g.nodes, [0.9, 0.925, 0.95], atol=1e-15)


def test_geometric_structure():
    eps = 2.0**-20
    g = make_grid(0.0, 4096, "geometric", eps)
    assert g.nodes[0] == 0.0
    assert g.nodes[-1] == 1.0 - eps
    ratios = (1.0 - g.nodes[1:]) / (1.0 - g.nodes[:-1])
    # constant decay factor of (1 - t), bounded below
    assert ratios.min() > 0.99
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-9)
    # step/(1 - t) stays bounded
    rel = g.dts / (1.0 - g.nodes[:-1])
    assert rel.max() < 0.005
    # the endgame is heavily resolved: at least half the nodes in the last 1%
    assert (g.nodes > 0.99).mean() > 0.5


def test_geometric_from_late_start():
    g = make_grid(0.5, 128, "geometric", 1e-4)
    assert g.nodes[0] == 0.5
    assert g.nodes[-1] == 1.0 - 1e-4
    assert (np.diff(g.nodes) > 0).all()


@pytest.mark.parametrize(
    "args",
    [
        (-0.1, 4, "uniform", 0.2),
        (0.9, 4, "uniform", 0.2),   # start >= 1 - eps
        (0.0, 0, "uniform", 0.2),
        (0.0, 4, "uniform", 0.0),
        (0.0, 4, "banana", 0.2),
    ],
)
def test_parameter_errors(args):
    with pytest.raises(ParameterError):
        make_grid(*args)


def test_mid_times_interior():
    g = make_grid(0.0, 64, "geometric", 1e-3)
    assert (g.mid_times > g.nodes[:-1]).all()
    assert (g.mid_times < g.nodes[1:]).all()


@settings(max_examples=60, deadline=None)
@given(
    start=st.floats(0.0, 0.8),
    n=st.integers(1, 600),
    mode=st.sampled_from(["uniform", "geometric"]),
    log2eps=st.floats(-25, -3),
)
def test_grid_invariants_property(start, n, mode, log2eps):
    eps = 2.0**log2eps
    if start >= 1.0 - eps:
        return
    g = make_grid(start, n, mode, eps)
    assert g.nodes.size == n + 1
    assert (np.diff(g.nodes) > 0).all()
    assert g.nodes[0] == start
    assert g.nodes[-1] == 1.0 - eps
    assert g.nodes[-1] < 1.0
