"""Concrete win-martingale constructions.

Three families live here:

* the sine-volatility optimizer  sigma(t, x) = sin(pi x) / (pi sqrt(1 - t)),
* deterministic time changes of it (feasible competitors whose quadratic
  variation density becomes Sigma_{tau(t)} * tau'(t)),
* the Bass martingale Phi(B_t / sqrt(1 - t)), obtained by transforming
  simulated Brownian paths pointwise rather than by Euler-stepping an SDE,
  so the only discretisation error is the Brownian one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr, ndtri

from .diffusion import DiffusionSpec, PathEnsemble, Separable, complete_terminal
from .errors import ParameterError

_SQRT_2PI = np.sqrt(2.0 * np.pi)


def aldous_sigma(t, x):
    """Optimizer volatility sin(pi x) / (pi sqrt(1 - t)).

    Vanishes at x in {0, 1}; blows up like (1 - t)^{-1/2}.  Raises for t >= 1.
    """
    t = np.asarray(t, dtype=np.float64)
    if (t >= 1.0).any():
        raise ParameterError("aldous_sigma needs t < 1")
    return np.sin(np.pi * np.asarray(x, dtype=np.float64)) / (np.pi * np.sqrt(1.0 - t))


def scaling_check(t, x):
    """sigma(t, x) * sqrt(1 - t): constant in t for fixed x if and only if
    the volatility runs the terminal profile at speed 1 / (1 - t)."""
    return aldous_sigma(t, x) * np.sqrt(1.0 - np.asarray(t, dtype=np.float64))


def _aldous_speed(t):
    return 1.0 / (np.pi * np.sqrt(1.0 - np.asarray(t, dtype=np.float64)))


def aldous_spec() -> DiffusionSpec:
    return DiffusionSpec(
        sigma=aldous_sigma, id="aldous", separable=Separable("sin", _aldous_speed)
    )


@dataclass(frozen=True)
class TimeChange:
    """Deterministic clock tau: [0,1] -> [0,1], increasing and onto, with
    derivative tau_prime positive on (0, 1)."""

    tau: Callable[[np.ndarray], np.ndarray]
    tau_prime: Callable[[np.ndarray], np.ndarray]
    name: str

    def __post_init__(self):
        if abs(float(self.tau(0.0))) > 1e-12 or abs(float(self.tau(1.0)) - 1.0) > 1e-12:
            raise ParameterError("time change must fix 0 and 1")
        probe = np.linspace(1e-6, 1 - 1e-6, 101)
        tp = np.asarray(self.tau_prime(probe), dtype=np.float64)
        if not (np.isfinite(tp).all() and (tp > 0).all()):
            raise ParameterError("tau_prime must be positive and finite on (0, 1)")
        tv = np.asarray(self.tau(probe), dtype=np.float64)
        if not (np.diff(tv) > 0).all():
            raise ParameterError("tau must be strictly increasing")


TIME_CHANGES = {
    "square": TimeChange(tau=lambda t: np.asarray(t) ** 2,
                         tau_prime=lambda t: 2.0 * np.asarray(t), name="square"),
    "cubic": TimeChange(tau=lambda t: np.asarray(t) ** 3,
                        tau_prime=lambda t: 3.0 * np.asarray(t) ** 2, name="cubic"),
}


def time_change_spec(base: DiffusionSpec, tc: TimeChange) -> DiffusionSpec:
    """Run `base` on the clock tau: the new quadratic-variation density along
    a path is Sigma_{tau(t)} * tau'(t), i.e. sigma_new = sigma(tau(t), x) *
    sqrt(tau'(t)).  Marginals at times 0 and 1 are unchanged, so the result
    is feasible for the same transport problem."""

    def sigma(t, x):
        return base.sigma(tc.tau(t), x) * np.sqrt(tc.tau_prime(t))

    separable = None
    if base.separable is not None:
        base_speed = base.separable.speed

        def speed(t):
            return base_speed(tc.tau(t)) * np.sqrt(tc.tau_prime(t))

        separable = Separable(base.separable.kind, speed)
    return DiffusionSpec(sigma=sigma, id=f"{base.id}-tc:{tc.name}", separable=separable)


def bass_sigma2(t, b):
    """Quadratic-variation density of the Bass martingale expressed through
    the driving Brownian value b: phi(b / sqrt(1-t))^2 / (1 - t) with phi the
    standard normal density.  Underflows to 0 for extreme |b|; use the log
    form inside integrals."""
    t = np.asarray(t, dtype=np.float64)
    if (t >= 1.0).any():
        raise ParameterError("bass_sigma2 needs t < 1")
    w = np.asarray(b, dtype=np.float64) / np.sqrt(1.0 - t)
    phi = np.exp(-0.5 * w * w) / _SQRT_2PI
    return phi * phi / (1.0 - t)


def bass_transform(brownian: PathEnsemble) -> PathEnsemble:
    """Map a standard-Brownian ensemble to the Bass win-martingale
    Phi(B_t / sqrt(1 - t)) pointwise; terminal outcomes are completed with
    the ensemble's own terminal stream.

    The Brownian start b0 sets the initial win probability Phi(b0); the
    standard construction starts at 0, i.e. at one half.
    """
    if brownian.win:
        raise ParameterError("bass_transform expects an unclamped Brownian ensemble")
    nodes = brownian.grid.nodes
    vals = ndtr(brownian.values / np.sqrt(1.0 - nodes)[None, :])
    m_last = vals[:, -1]
    terminal = complete_terminal(m_last, brownian.seed, win=True)
    return PathEnsemble(
        grid=brownian.grid, values=vals, seed=brownian.seed, terminal=terminal,
        spec_id="bass", win=True,
    )


def bass_initial_b(x0: float) -> float:
    """Brownian start value mapping to initial win probability x0."""
    if not 0.0 < x0 < 1.0:
        raise ParameterError("bass start requires x0 in (0, 1)")
    return float(ndtri(x0))


def spec_from_id(spec_id: str) -> DiffusionSpec:
    """Resolve the diffusion specs addressable by string id: 'aldous' and
    'aldous-tc:<name>'.  ('bass' is not an Euler spec; it is handled by the
    transform above.)"""
    if spec_id == "aldous":
        return aldous_spec()
    if spec_id.startswith("aldous-tc:"):
        name = spec_id.split(":", 1)[1]
        if name not in TIME_CHANGES:
            raise ParameterError(
                f"unknown time change {name!r}; available: {sorted(TIME_CHANGES)}"
            )
        return time_change_spec(aldous_spec(), TIME_CHANGES[name])
    raise ParameterError(f"unknown spec id {spec_id!r}")
