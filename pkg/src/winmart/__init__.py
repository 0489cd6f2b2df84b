"""Simulation and analysis of win-probability martingales on [0, 1]: seeded
Euler path ensembles, specific-relative-entropy estimation against Brownian
motion, closed-form value functions with numerical optimality certificates,
and a discrete entropic martingale-transport solver.
"""

__version__ = "0.1.0"

from ._backend import HAS_FASTPATH, backend_name, get_backend
from .diffusion import (
    DiffusionSpec,
    PathEnsemble,
    Separable,
    brownian_ensemble,
    interior_intervals,
    realized_sigma2,
    simulate_paths,
)
from .entropy import (
    EntropyEstimate,
    atomic_terminal_detector,
    ensemble_entropy,
    entropy_functional,
    estimate_entropy,
    gantert_discrete_entropy_constant_vol,
)
from .grids import DEFAULT_EPSILON, TimeGrid, make_grid
from .martingales import (
    TIME_CHANGES,
    TimeChange,
    aldous_sigma,
    aldous_spec,
    bass_sigma2,
    bass_transform,
    scaling_check,
    spec_from_id,
    time_change_spec,
)
from .value import (
    feller_V,
    foc_process,
    hjb_residual,
    martingale_increment_test,
    martingale_report_suite,
    ode_residual,
    optimal_value,
    pde_log_sigma_residual,
    run_certificates,
    sigma_star,
    v_bar,
    v_tilde,
)

__all__ = [
    "__version__",
    "HAS_FASTPATH",
    "backend_name",
    "get_backend",
    "DiffusionSpec",
    "PathEnsemble",
    "Separable",
    "brownian_ensemble",
    "interior_intervals",
    "realized_sigma2",
    "simulate_paths",
    "EntropyEstimate",
    "atomic_terminal_detector",
    "ensemble_entropy",
    "entropy_functional",
    "estimate_entropy",
    "gantert_discrete_entropy_constant_vol",
    "DEFAULT_EPSILON",
    "TimeGrid",
    "make_grid",
    "TIME_CHANGES",
    "TimeChange",
    "aldous_sigma",
    "aldous_spec",
    "bass_sigma2",
    "bass_transform",
    "scaling_check",
    "spec_from_id",
    "time_change_spec",
    "feller_V",
    "foc_process",
    "hjb_residual",
    "martingale_increment_test",
    "martingale_report_suite",
    "ode_residual",
    "optimal_value",
    "pde_log_sigma_residual",
    "run_certificates",
    "sigma_star",
    "v_bar",
    "v_tilde",
]
