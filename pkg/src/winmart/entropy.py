"""Specific relative entropy of continuous martingales against Brownian motion.

The functional estimated here is

    h = 0.5 * E[ integral_0^1 ( Sigma_t - log Sigma_t - 1 ) dt ],

with Sigma the quadratic-variation density of the path law.  The integrand is
pointwise nonnegative and vanishes exactly at Sigma = 1 (Brownian motion).

Two Sigma sources are supported.  Analytic mode evaluates the known
sigma^2(t, M_t) along simulated paths and is what the headline numbers use.
Realized mode plugs in the per-interval estimator (dM)^2/dt, which is the
right tool for validating the simulator's quadratic variation itself but is
unsuitable for the value of the functional: the per-interval estimate is
Sigma times a chi-square(1)/1 factor, so its log carries the bias
E[log chi^2_1] = -(gamma + log 2), about -1.27 nats per unit time.

Grid truncation at 1 - eps is handled by a tail bracket; see
`estimate_entropy`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.special import ndtr

from . import _backend
from .diffusion import DiffusionSpec, PathEnsemble, interior_intervals, stream_paths
from .errors import EvaluationError, ParameterError
from .grids import TimeGrid, make_grid
from .martingales import bass_initial_b, spec_from_id
from .value import band_delta, v_bar, v_tilde


@dataclass(frozen=True)
class EntropyEstimate:
    """Monte-Carlo estimate of the entropy functional over the grid span,
    plus a bracket for the untracked tail [t_last, 1].

    mean excludes the tail; `corrected` adds the bracket's upper end, which
    for the exactly-computable tails (sine family, constant volatility) is
    the tail's point value.  std_error is the standard error of the per-path
    totals including their tail terms.
    """

    mean: float
    std_error: float
    n_paths: int
    truncation_bracket: tuple[float, float]
    grid_id: str
    spec_id: str = ""

    @property
    def corrected(self) -> float:
        return self.mean + self.truncation_bracket[1]

    def to_dict(self) -> dict:
        return {
            "spec_id": self.spec_id,
            "mean": self.mean,
            "std_error": self.std_error,
            "n_paths": self.n_paths,
            "bracket": list(self.truncation_bracket),
            "corrected": self.corrected,
            "grid_id": self.grid_id,
        }


def entropy_functional(
    sigma2_paths: np.ndarray,
    grid: TimeGrid,
    interior: Optional[np.ndarray] = None,
    tail_bracket: tuple[float, float] = (0.0, 0.0),
    grid_id: Optional[str] = None,
    spec_id: str = "",
) -> EntropyEstimate:
    """Integrate 0.5 (Sigma - log Sigma - 1) over the grid per path and average.

    sigma2_paths: (n_paths, n_steps) quadratic-variation densities per
    interval.  `interior` masks the intervals on which the path is strictly
    inside (0, 1); masked-out intervals contribute zero (absorption before
    the final time is a discretisation artifact, and the discrepancy belongs
    to the tail bracket).  A nonpositive Sigma on an interior interval raises
    EvaluationError, as it can only come from a broken simulator.
    """
    s2 = np.asarray(sigma2_paths, dtype=np.float64)
    if s2.ndim != 2 or s2.shape[1] != grid.n_steps:
        raise ParameterError("sigma2_paths must have shape (n_paths, n_steps)")
    if interior is None:
        interior = s2 > 0.0
        if (s2 < 0.0).any():
            raise EvaluationError("negative quadratic-variation density")
    else:
        interior = np.asarray(interior, dtype=bool)
        if interior.shape != s2.shape:
            raise ParameterError("interior mask must match sigma2_paths")
        if (s2[interior] <= 0.0).any():
            raise EvaluationError(
                "nonpositive quadratic-variation density on an interior interval"
            )
    with np.errstate(divide="ignore"):
        integrand = 0.5 * (s2 - np.log(np.where(interior, s2, 1.0)) - 1.0)
    per_path = (np.where(interior, integrand, 0.0) * grid.dts).sum(axis=1)
    n = per_path.size
    mean = float(per_path.mean())
    se = float(per_path.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return EntropyEstimate(
        mean=mean, std_error=se, n_paths=n,
        truncation_bracket=(float(tail_bracket[0]), float(tail_bracket[1])),
        grid_id=grid_id or grid.label, spec_id=spec_id,
    )


def gantert_discrete_entropy_constant_vol(a: float, n: int) -> float:
    """Scaled discretized relative entropy (1/n) H(X^n(Q) | X^n(W)) for Q a
    Brownian motion with constant quadratic-variation density a.

    The n increments are independent N(0, a/n) versus N(0, 1/n); the
    Kullback-Leibler divergence of each pair depends only on the variance
    ratio, KL = 0.5 (a - log a - 1), so the scaled total is that same number
    for every n, matching the continuous-time functional.
    """
    if a <= 0:
        raise ParameterError("variance ratio a must be positive")
    if n < 1:
        raise ParameterError("n must be >= 1")
    return 0.5 * (a - math.log(a) - 1.0)


def atomic_terminal_detector(ensemble: Union[PathEnsemble, np.ndarray]) -> bool:
    """True when the terminal law visibly carries atoms.

    Win-martingale ensembles terminate on {0, 1}, so any boundary outcome or
    any exactly repeated value counts; samples from a law with a density are
    almost surely pairwise distinct in double precision.  A True here means
    the discretized relative entropy against the Gaussian walk is +infinity
    at every discretisation level even when the continuous-time functional
    is finite.
    """
    term = ensemble.terminal if isinstance(ensemble, PathEnsemble) else np.asarray(ensemble)
    term = np.asarray(term, dtype=np.float64)
    if ((term == 0.0) | (term == 1.0)).any():
        return True
    _, counts = np.unique(term, return_counts=True)
    return bool(counts.max() >= 2) if counts.size else False


# ---------------------------------------------------------------------------
# tail brackets for the truncated interval [t_last, 1]


def _band_gap(s, x):
    # |x - x^2 - 1 + s + (1-s)log(1-s)| / 2, the explicit part of the
    # two-bounds band between 2*v_tilde and v_bar
    return np.abs(x - x * x - 1 + s + (1 - s) * np.log1p(-s)) / 2


def tail_bracket_exact_sine(t_last: float, m_last: np.ndarray):
    """For the sine-volatility optimizer the tail equals E[v_bar(t_last, M)]
    exactly (the running-cost process is a martingale), estimated over the
    interior paths; absorbed paths contribute zero."""
    interior = (m_last > 0.0) & (m_last < 1.0)
    tail = np.where(interior, v_bar(t_last, np.where(interior, m_last, 0.5)), 0.0)
    return 0.0, float(tail.mean()), tail


def tail_bracket_competitor(t_last: float, m_last: np.ndarray):
    """For competitors the tail is unknown; bracket it below by zero and
    above by the banded proxy 2 v_tilde + band gap + delta (1 - t_last),
    which dominates v_bar at (t_last, M) and is of the same microscopic
    order as the truncated interval."""
    interior = (m_last > 0.0) & (m_last < 1.0)
    safe = np.where(interior, m_last, 0.5)
    proxy = 2.0 * v_tilde(t_last, safe) + _band_gap(t_last, safe) + band_delta() * (1.0 - t_last)
    tail = np.where(interior, np.maximum(proxy, 0.0), 0.0)
    return 0.0, float(tail.mean()), tail


# ---------------------------------------------------------------------------
# streaming estimators


def _estimate_from_stream(per_path_total, grid_part_mean, bracket, n_paths, grid, spec_id):
    se = float(per_path_total.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else float("inf")
    return EntropyEstimate(
        mean=float(grid_part_mean), std_error=se, n_paths=n_paths,
        truncation_bracket=(float(bracket[0]), float(bracket[1])),
        grid_id=grid.label, spec_id=spec_id,
    )


def estimate_entropy(
    spec: Union[str, DiffusionSpec],
    x0: float,
    n_paths: int,
    n_steps: int = 4096,
    seed: int = 0,
    grid: Optional[TimeGrid] = None,
    mode: str = "analytic",
    backend=None,
    workers: Optional[int] = None,
) -> EntropyEstimate:
    """Simulate the requested law and estimate its entropy functional.

    spec: 'aldous', 'aldous-tc:<name>', 'bass', 'constvol:<a>' or a
    DiffusionSpec.  Chunks stream through the kernel, so memory stays flat in
    n_paths; identical (spec, grid, n_paths, seed) give identical results for
    any worker count.
    """
    if not 0.0 < x0 < 1.0 and not (isinstance(spec, str) and spec.startswith("constvol")):
        raise ParameterError("x0 must be inside (0, 1)")
    if grid is None:
        grid = make_grid(0.0, n_steps, "geometric")
    if mode not in ("analytic", "realized"):
        raise ParameterError("mode must be 'analytic' or 'realized'")

    if isinstance(spec, str) and spec == "bass":
        if mode != "analytic":
            raise ParameterError("the Bass entropy is only available in analytic mode")
        return _estimate_bass(x0, n_paths, seed, grid, backend, workers)
    if isinstance(spec, str) and spec.startswith("constvol:"):
        if mode != "analytic":
            raise ParameterError("constant-volatility entropy is analytic-mode only")
        return _estimate_constvol(float(spec.split(":", 1)[1]), n_paths, seed, grid, backend, workers)

    dspec = spec_from_id(spec) if isinstance(spec, str) else spec
    if mode == "realized":
        return _estimate_realized(dspec, x0, n_paths, seed, grid, backend, workers)

    speed = None
    sigma_callable = None
    if dspec.separable is not None and dspec.separable.kind == "sin":
        speed = np.asarray(dspec.separable.speed(grid.mid_times), dtype=np.float64)
    else:
        sigma_callable = dspec.sigma
    res = stream_paths(
        _backend.KIND_SIN, _backend.IG_ANALYTIC, grid, x0, n_paths, seed,
        speed=speed, sigma_callable=sigma_callable, backend=backend, workers=workers,
    )
    if not np.isfinite(res.integral).all():
        raise EvaluationError("entropy integrand diverged along a path")
    if dspec.id == "aldous":
        lo, hi, tail = tail_bracket_exact_sine(grid.t_last, res.m_last)
    else:
        lo, hi, tail = tail_bracket_competitor(grid.t_last, res.m_last)
    total = res.integral + tail
    return _estimate_from_stream(total, res.integral.mean(), (lo, hi), n_paths, grid, dspec.id)


def _estimate_bass(x0, n_paths, seed, grid, backend, workers):
    mid = grid.mid_times
    res = stream_paths(
        _backend.KIND_FREE, _backend.IG_BASS, grid, bass_initial_b(x0), n_paths, seed,
        speed=np.ones(grid.n_steps),
        aux0=np.log(1.0 - mid), aux1=1.0 / np.sqrt(1.0 - mid),
        backend=backend, workers=workers,
    )
    m_last = ndtr(res.m_last / math.sqrt(1.0 - grid.t_last))
    lo, hi, tail = tail_bracket_competitor(grid.t_last, m_last)
    total = res.integral + tail
    return _estimate_from_stream(total, res.integral.mean(), (lo, hi), n_paths, grid, "bass")


def _estimate_constvol(a, n_paths, seed, grid, backend, workers):
    if a <= 0:
        raise ParameterError("constant volatility needs a > 0")
    res = stream_paths(
        _backend.KIND_FREE, _backend.IG_ANALYTIC, grid, 0.0, n_paths, seed,
        speed=np.full(grid.n_steps, math.sqrt(a)), backend=backend, workers=workers,
    )
    # deterministic integrand: the tail over [t_last, 1] is exact
    tail = 0.5 * (a - math.log(a) - 1.0) * (1.0 - grid.t_last)
    total = res.integral + tail
    return _estimate_from_stream(total, res.integral.mean(), (tail, tail), n_paths, grid,
                                 f"constvol:{a:g}")


def _estimate_realized(dspec, x0, n_paths, seed, grid, backend, workers):
    """Realized-mode estimate, streamed chunk by chunk from materialised path
    values.  Carries the chi-square log bias; see the module docstring."""
    per_path = np.empty(n_paths)
    m_last = np.empty(n_paths)
    dts = grid.dts

    def consume(start, stop, values):
        inc = np.diff(values, axis=1)
        s2 = inc * inc / dts
        left = values[:, :-1]
        interior = (left > 0.0) & (left < 1.0)
        nonzero = s2 > 0.0
        if (s2[interior & ~nonzero]).size:
            raise EvaluationError("zero realized variance on an interior interval")
        mask = interior & nonzero
        with np.errstate(divide="ignore"):
            integrand = 0.5 * (s2 - np.log(np.where(mask, s2, 1.0)) - 1.0)
        per_path[start:stop] = (np.where(mask, integrand, 0.0) * dts).sum(axis=1)
        m_last[start:stop] = values[:, -1]

    speed = None
    sigma_callable = None
    if dspec.separable is not None and dspec.separable.kind == "sin":
        speed = np.asarray(dspec.separable.speed(grid.mid_times), dtype=np.float64)
    else:
        sigma_callable = dspec.sigma
    stream_paths(
        _backend.KIND_SIN, _backend.IG_NONE, grid, x0, n_paths, seed,
        speed=speed, sigma_callable=sigma_callable, want_values=True,
        chunk_consumer=consume, backend=backend, workers=workers,
    )
    lo, hi, tail = tail_bracket_competitor(grid.t_last, m_last)
    total = per_path + tail
    return _estimate_from_stream(total, per_path.mean(), (lo, hi), n_paths, grid,
                                 f"{dspec.id}(realized)")


def ensemble_entropy(
    ensemble: PathEnsemble, mode: str = "realized", sigma2_fn=None
) -> EntropyEstimate:
    """Entropy functional of a materialised ensemble.

    realized mode uses (dM)^2/dt per interval; analytic mode evaluates
    sigma2_fn(t, M_t) on interval left endpoints.  Absorbed stretches are
    masked out in both modes.
    """
    grid = ensemble.grid
    interior = interior_intervals(ensemble) if ensemble.win else None
    if mode == "realized":
        from .diffusion import realized_sigma2

        s2 = realized_sigma2(ensemble)
        if interior is not None:
            interior = interior & (s2 > 0.0)
    elif mode == "analytic":
        if sigma2_fn is None:
            raise ParameterError("analytic mode needs sigma2_fn(t, m)")
        left_t = grid.nodes[:-1]
        s2 = np.asarray(sigma2_fn(left_t[None, :], ensemble.values[:, :-1]), dtype=np.float64)
    else:
        raise ParameterError("mode must be 'analytic' or 'realized'")
    return entropy_functional(
        s2, grid, interior=interior, spec_id=f"{ensemble.spec_id}({mode})"
    )
