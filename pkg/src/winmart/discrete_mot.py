"""Discrete-time entropic martingale transport on a finite grid.

Two pieces:

* an identity check relating Shannon entropy of a discrete path law to its
  relative entropy against a Gaussian random walk (the two sides are computed
  by independent routes and must agree up to grid discretisation), and

* a solver for the minimal-relative-entropy martingale coupling between
  fixed marginals, by cyclic Bregman projections: an h-transform enforcing
  the terminal marginal alternates with a per-row exponential tilt enforcing
  the conditional-mean (martingale) constraint, the tilt multiplier found by
  safeguarded Newton on the row's log-partition function.

Kernels are carried in log space throughout the iteration, so marginal
reweighting can never truncate row supports by underflow.

Entropy conventions on a grid: a weight vector w over cells of width dx
represents the density w/dx, so every differential entropy carries a
-log(dx) per coordinate; the identity check applies the convention on both
sides so the corrections cancel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import logsumexp

from .errors import InfeasibleError, NumericalError, ParameterError

_VISIT_FLOOR = 1e-13
_LOG_TINY = -745.0  # below exp underflow


@dataclass(frozen=True)
class DiscreteMartingaleProblem:
    """Martingale transport data on a uniform spatial grid.

    states: sorted grid points with uniform spacing dx; mu, nu: probability
    weights on states (nonnegative, unit sum, equal means: necessary for a
    martingale coupling); n_steps: number of transitions T; ref_var: step
    variance of the Gaussian reference walk; f0: initial reference weights
    (uniform when omitted; the optimizer does not depend on it).
    """

    states: np.ndarray
    n_steps: int
    mu: np.ndarray
    nu: np.ndarray
    ref_var: float
    f0: Optional[np.ndarray] = None

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.float64)
        mu = np.asarray(self.mu, dtype=np.float64)
        nu = np.asarray(self.nu, dtype=np.float64)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nu", nu)
        if states.ndim != 1 or states.size < 3:
            raise ParameterError("states must be a 1-D grid with >= 3 points")
        d = np.diff(states)
        if (d <= 0).any():
            raise ParameterError("states must be strictly increasing")
        if not np.allclose(d, d[0], rtol=1e-9, atol=0):
            raise ParameterError("states must be uniformly spaced")
        if self.n_steps < 1:
            raise ParameterError("n_steps must be >= 1")
        if self.ref_var <= 0:
            raise ParameterError("ref_var must be positive")
        for name, w in (("mu", mu), ("nu", nu)):
            if w.shape != states.shape:
                raise ParameterError(f"{name} must match states")
            if (w < 0).any():
                raise ParameterError(f"{name} must be nonnegative")
            if abs(w.sum() - 1.0) > 1e-12:
                raise ParameterError(f"{name} must sum to one within 1e-12")
        if abs(mu @ states - nu @ states) > 1e-8:
            raise ParameterError("mu and nu must share their mean")
        if self.f0 is not None:
            f0 = np.asarray(self.f0, dtype=np.float64)
            if f0.shape != states.shape or (f0 < 0).any() or f0.sum() <= 0:
                raise ParameterError("f0 must be nonnegative weights on states")
            object.__setattr__(self, "f0", f0)

    @property
    def dx(self) -> float:
        return float(self.states[1] - self.states[0])

    def f0_weights(self) -> np.ndarray:
        if self.f0 is None:
            return np.full(self.states.size, 1.0 / self.states.size)
        return self.f0 / self.f0.sum()

    def check_convex_order(self, tol: float = 1e-9) -> None:
        """Raise InfeasibleError unless mu precedes nu in convex order on the
        grid (equal means plus dominated call functions at every strike)."""
        x = self.states
        calls_mu = np.maximum(x[None, :] - x[:, None], 0.0) @ self.mu
        calls_nu = np.maximum(x[None, :] - x[:, None], 0.0) @ self.nu
        if (calls_nu - calls_mu).min() < -tol:
            k = int(np.argmin(calls_nu - calls_mu))
            raise InfeasibleError(
                f"marginals not in convex order: call at strike {x[k]:g} "
                f"decreases by {calls_mu[k] - calls_nu[k]:.3e}"
            )

    def to_json(self) -> str:
        out = {
            "states": self.states.tolist(),
            "T": self.n_steps,
            "mu": self.mu.tolist(),
            "nu": self.nu.tolist(),
            "ref_var": self.ref_var,
        }
        if self.f0 is not None:
            out["f0"] = np.asarray(self.f0).tolist()
        return json.dumps(out)

    @classmethod
    def from_json(cls, text: Union[str, dict]) -> "DiscreteMartingaleProblem":
        d = json.loads(text) if isinstance(text, str) else text
        return cls(
            states=np.asarray(d["states"], dtype=np.float64),
            n_steps=int(d["T"]),
            mu=np.asarray(d["mu"], dtype=np.float64),
            nu=np.asarray(d["nu"], dtype=np.float64),
            ref_var=float(d["ref_var"]),
            f0=np.asarray(d["f0"], dtype=np.float64) if "f0" in d else None,
        )


@dataclass
class DiscretePathLaw:
    """Markov path law on the grid: initial weights and per-step kernels."""

    q0: np.ndarray
    kernels: np.ndarray  # (T, n, n), rows sum to one

    def marginals(self) -> list[np.ndarray]:
        out = [np.asarray(self.q0, dtype=np.float64)]
        for k in self.kernels:
            out.append(out[-1] @ k)
        return out

    def terminal(self) -> np.ndarray:
        return self.marginals()[-1]


def _log_reference_kernel(problem: DiscreteMartingaleProblem) -> np.ndarray:
    x = problem.states
    expo = -((x[None, :] - x[:, None]) ** 2) / (2.0 * problem.ref_var)
    return expo - logsumexp(expo, axis=1, keepdims=True)


def reference_kernel(problem: DiscreteMartingaleProblem) -> np.ndarray:
    """Row-stochastic discretized Gaussian step kernel."""
    return np.exp(_log_reference_kernel(problem))


def reference_walk(problem: DiscreteMartingaleProblem) -> DiscretePathLaw:
    """The reference law itself: start f0, Gaussian steps."""
    g = reference_kernel(problem)
    return DiscretePathLaw(
        q0=problem.f0_weights(),
        kernels=np.repeat(g[None, :, :], problem.n_steps, axis=0),
    )


def gaussian_walk(problem: DiscreteMartingaleProblem, var_scale: float,
                  q0: Optional[np.ndarray] = None) -> DiscretePathLaw:
    """Gaussian random walk with step variance var_scale * ref_var."""
    if var_scale <= 0:
        raise ParameterError("var_scale must be positive")
    x = problem.states
    expo = -((x[None, :] - x[:, None]) ** 2) / (2.0 * var_scale * problem.ref_var)
    logk = expo - logsumexp(expo, axis=1, keepdims=True)
    return DiscretePathLaw(
        q0=problem.f0_weights() if q0 is None else np.asarray(q0, dtype=np.float64),
        kernels=np.repeat(np.exp(logk)[None, :, :], problem.n_steps, axis=0),
    )


def _kl_weighted_rows(p_rows, log_p_rows, log_ref, weights):
    # sum_x w(x) sum_y P(x,y) (log P - log ref)(x,y); 0 log 0 = 0
    diff = np.where(p_rows > 0, log_p_rows - log_ref, 0.0)
    return float((weights[:, None] * p_rows * diff).sum())


def kl_to_reference(problem: DiscreteMartingaleProblem, law: DiscretePathLaw) -> float:
    """H(law | reference walk) by the Markov chain rule (discrete weights)."""
    log_g = _log_reference_kernel(problem)
    g0 = problem.f0_weights()
    q0 = np.asarray(law.q0, dtype=np.float64)
    if ((q0 > 0) & (g0 <= 0)).any():
        return float("inf")
    mask = q0 > 0
    tot = float((q0[mask] * (np.log(q0[mask]) - np.log(g0[mask]))).sum())
    marg = q0
    for k in np.asarray(law.kernels, dtype=np.float64):
        with np.errstate(divide="ignore"):
            logk = np.log(np.where(k > 0, k, 1.0))
        if ((k > 0) & ~np.isfinite(log_g)).any():
            return float("inf")
        tot += _kl_weighted_rows(k, logk, log_g, marg)
        marg = marg @ k
    return tot


def entropy_identity_check(problem: DiscreteMartingaleProblem,
                           law: DiscretePathLaw) -> tuple[float, float]:
    """Compute both sides of the entropy identity by independent routes.

    Left side: H(Q | gamma_T) summed directly over the grid (Markov chain
    rule).  Right side: -H(Q) + (T/2) log(2 pi s^2) - E_mu[log f0-density]
    + (E_nu[x^2] - E_mu[x^2]) / (2 s^2), with H(Q) the differential entropy
    of the path law under the grid-density convention.  The two agree up to
    grid discretisation (reference-row normalizers versus the exact Gaussian
    normalizer); returns (lhs, rhs).

    A law putting mass outside the reference support makes the left side
    +inf (the infinite-relative-entropy flag).
    """
    lhs = kl_to_reference(problem, law)

    q0 = np.asarray(law.q0, dtype=np.float64)
    kernels = np.asarray(law.kernels, dtype=np.float64)
    T = kernels.shape[0]
    dx = problem.dx
    margs = [q0]
    for k in kernels:
        margs.append(margs[-1] @ k)

    def h_disc(w):
        wp = w[w > 0]
        return float(-(wp * np.log(wp)).sum())

    h_diff = h_disc(q0) + (T + 1) * np.log(dx)
    for t in range(T):
        rows = kernels[t]
        with np.errstate(divide="ignore"):
            logr = np.log(np.where(rows > 0, rows, 1.0))
        h_diff += float(-(margs[t][:, None] * rows * np.where(rows > 0, logr, 0.0)).sum())

    f0w = problem.f0_weights()
    if ((q0 > 0) & (f0w <= 0)).any():
        return lhs, float("inf")
    mask = q0 > 0
    e_log_f0 = float((q0[mask] * np.log(f0w[mask] / dx)).sum())
    x2 = problem.states**2
    rhs = (
        -h_diff
        + 0.5 * T * np.log(2.0 * np.pi * problem.ref_var)
        - e_log_f0
        + (margs[-1] @ x2 - q0 @ x2) / (2.0 * problem.ref_var)
    )
    return lhs, float(rhs)


# ---------------------------------------------------------------------------
# solver


@dataclass
class MartingaleCoupling:
    """Converged (or best-effort) minimal-entropy martingale coupling."""

    problem: DiscreteMartingaleProblem
    kernels: np.ndarray            # (T, n, n)
    multipliers: np.ndarray        # (T, n) exponential-tilt duals
    objective_trace: list          # KL(Q | reference) after each full sweep
    terminal_tv: float
    mean_residual: float
    n_sweeps: int
    converged: bool
    visited: np.ndarray = field(default=None)  # (T, n) states with visit mass

    def law(self) -> DiscretePathLaw:
        return DiscretePathLaw(q0=self.problem.mu.copy(), kernels=self.kernels)

    def kl(self) -> float:
        return kl_to_reference(self.problem, self.law())


def _tilt_rows(log_rows, states, targets, mask, lam, tol, max_iter=200):
    """Tilt each masked row by exp(lam * y) so its mean hits the target.

    Solves psi'(lam) = 0 for psi(lam) = logsumexp(log_row + lam (y - x)) per
    row: Newton steps safeguarded by a (lo, hi) bracket with geometric
    expansion, falling back to bisection whenever Newton leaves the bracket.
    Returns (prob_rows, lam, max_residual, iterations).
    """
    dev = states[None, :] - targets[:, None]
    lam = np.where(mask, lam, 0.0)
    lo = np.full_like(lam, -np.inf)
    hi = np.full_like(lam, np.inf)
    expand = np.full_like(lam, 1.0)

    def stats(l):
        e = log_rows + l[:, None] * dev
        e = e - e.max(axis=1, keepdims=True)
        p = np.exp(e)
        z = p.sum(axis=1)
        p /= z[:, None]
        mean = p @ states
        var = np.maximum(p @ (states * states) - mean * mean, 0.0)
        return p, mean, var

    p, mean, var = stats(lam)
    r = np.where(mask, mean - targets, 0.0)
    it = 0
    for it in range(1, max_iter + 1):
        worst = np.max(np.abs(r))
        if worst < tol:
            break
        hi = np.where(r > 0, np.minimum(hi, lam), hi)
        lo = np.where(r < 0, np.maximum(lo, lam), lo)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = lam - np.clip(r / np.where(var > 0, var, np.inf), -1e6, 1e6)
        both = np.isfinite(lo) & np.isfinite(hi)
        inside = (newton > lo) & (newton < hi) & np.isfinite(newton)
        stepped = np.where(r > 0, lam - expand, lam + expand)
        mid = 0.5 * (np.where(both, lo, 0.0) + np.where(both, hi, 0.0))
        cand = np.where(inside, newton, np.where(both, mid, stepped))
        expand = np.where(inside | both, expand, expand * 2.0)
        lam = np.where(mask & (np.abs(r) >= tol), cand, lam)
        p, mean, var = stats(lam)
        r = np.where(mask, mean - targets, 0.0)
    return p, lam, float(np.max(np.abs(r))), it


def solve_entropic_mot(
    problem: DiscreteMartingaleProblem,
    max_iters: int = 2000,
    tol: float = 1e-7,
    mean_tol: float = 1e-10,
) -> MartingaleCoupling:
    """Minimize H(Q | Gaussian walk) over martingale couplings from mu to nu.

    Cyclic projections per sweep: (i) terminal-marginal h-transform with the
    initial law reset to mu, (ii) per-row martingale tilt at every visited
    interior state (mean_tol on the conditional mean).  Stops when the
    terminal total-variation error and the post-sweep mean residual both drop
    below tol.  The KL objective is recorded after every sweep.

    Raises InfeasibleError when (mu, nu) are not in convex order and
    NumericalError when a visited row cannot be tilted (state reported).
    """
    problem.check_convex_order()
    x = problem.states
    n = x.size
    T = problem.n_steps
    log_g = _log_reference_kernel(problem)
    mu, nu = problem.mu, problem.nu
    with np.errstate(divide="ignore"):
        log_nu = np.where(nu > 0, np.log(np.where(nu > 0, nu, 1.0)), _LOG_TINY)

    log_k = np.repeat(log_g[None, :, :], T, axis=0)
    lams = np.zeros((T, n))
    inner = (x > x[0]) & (x < x[-1])
    trace: list[float] = []
    tv = np.inf
    mres = np.inf
    visited = np.zeros((T, n), dtype=bool)
    sweep = 0

    for sweep in range(1, max_iters + 1):
        # terminal projection: reweight path mass by nu / current terminal,
        # backward normalisation keeps every step a proper kernel
        marg = mu
        for t in range(T):
            marg = marg @ np.exp(log_k[t])
        with np.errstate(divide="ignore"):
            log_h = log_nu - np.where(marg > 0, np.log(np.where(marg > 0, marg, 1.0)), _LOG_TINY)
        for t in range(T - 1, -1, -1):
            kh = log_k[t] + log_h[None, :]
            z = logsumexp(kh, axis=1)
            log_k[t] = kh - z[:, None]
            log_h = z

        # martingale projection at visited interior states; a visited edge
        # state can only satisfy the mean constraint as a point mass (the
        # tilt's lambda -> +-inf limit), so freeze it there and let the
        # terminal projection suppress transitions into it
        marg = mu
        mres = 0.0
        for t in range(T):
            mask = (marg > _VISIT_FLOOR) & inner
            visited[t] = marg > _VISIT_FLOOR
            for idx in np.flatnonzero(visited[t] & ~inner):
                log_k[t][idx, :] = -np.inf
                log_k[t][idx, idx] = 0.0
            p, lams[t], r, _ = _tilt_rows(log_k[t], x, x, mask, lams[t], mean_tol)
            with np.errstate(divide="ignore"):
                log_k[t] = np.where(mask[:, None], np.log(np.where(p > 0, p, np.exp(_LOG_TINY))), log_k[t])
            if r > 0.1:
                bad = x[mask][int(np.argmax(np.abs((p @ x) - x)[mask]))] if mask.any() else float("nan")
                raise NumericalError(f"martingale tilt failed to converge near state {bad:g}")
            mres = max(mres, r)
            marg = marg @ np.exp(log_k[t])

        tv = 0.5 * float(np.abs(marg - nu).sum())
        law = DiscretePathLaw(q0=mu.copy(), kernels=np.exp(log_k))
        trace.append(kl_to_reference(problem, law))
        if tv < tol and mres < tol:
            break

    kernels = np.exp(log_k)
    return MartingaleCoupling(
        problem=problem, kernels=kernels, multipliers=lams.copy(),
        objective_trace=trace, terminal_tv=tv, mean_residual=mres,
        n_sweeps=sweep, converged=bool(tv < tol and mres < tol),
        visited=visited,
    )


def extract_local_vol(coupling: MartingaleCoupling, dt: float = 1.0) -> np.ndarray:
    """Conditional variance of each kernel row divided by the time step;
    with dt = 1 this is the raw per-step conditional variance, with
    dt = 1/T it approximates the quadratic-variation density."""
    x = coupling.problem.states
    k = coupling.kernels
    mean = k @ x
    var = k @ (x * x) - mean * mean
    return np.maximum(var, 0.0) / dt


# ---------------------------------------------------------------------------
# problem builders


def _recenter(weights: np.ndarray, states: np.ndarray, target_mean: float,
              iters: int = 80) -> np.ndarray:
    """Exponentially tilt weights so the mean is exactly target_mean."""
    w = weights / weights.sum()
    theta = 0.0
    for _ in range(iters):
        tw = w * np.exp(theta * (states - target_mean))
        tw /= tw.sum()
        m = tw @ states
        v = tw @ (states * states) - m * m
        if abs(m - target_mean) < 5e-15 or v <= 0:
            break
        theta -= (m - target_mean) / v
    return tw


def mollified_bernoulli(states: np.ndarray, x0: float, width: float,
                        mean: Optional[float] = None) -> np.ndarray:
    """Bernoulli(x0) on {0, 1} convolved with a centred Gaussian of the given
    width, discretized on the grid and exponentially recentred so its mean is
    exactly `mean` (default x0).  Built in log space so the far tails stay
    positive."""
    if width <= 0:
        raise ParameterError("width must be positive")
    s = np.asarray(states, dtype=np.float64)
    la = np.logaddexp(
        np.log(x0) - 0.5 * ((s - 1.0) / width) ** 2,
        np.log1p(-x0) - 0.5 * (s / width) ** 2,
    )
    w = np.exp(la - la.max())
    return _recenter(w, s, x0 if mean is None else mean)


def make_win_problem(
    x0: float = 0.5,
    n_steps: int = 8,
    width: float = 0.08,
    n_states: int = 201,
    lo: float = -0.5,
    hi: float = 1.5,
) -> DiscreteMartingaleProblem:
    """Time-scaled discrete counterpart of the win-martingale problem on
    [0, 1]: T steps of a Gaussian walk with step variance 1/T (so the
    reference is the discretized Wiener measure), initial mass in one grid
    cell near x0, terminal a mollified Bernoulli(x0).  The grid extends past
    [0, 1] because the reference walk is unconfined."""
    states = np.linspace(lo, hi, n_states)
    i0 = int(np.argmin(np.abs(states - x0)))
    mu = np.zeros(n_states)
    mu[i0] = 1.0
    nu = mollified_bernoulli(states, x0, width, mean=float(states[i0]))
    return DiscreteMartingaleProblem(
        states=states, n_steps=n_steps, mu=mu, nu=nu, ref_var=1.0 / n_steps
    )


def make_identity_problem(
    n_states: int = 201,
    lo: float = -1.0,
    hi: float = 1.0,
    n_steps: int = 4,
    step_sd: float = 0.08,
    start_sd: float = 0.02,
) -> DiscreteMartingaleProblem:
    """Well-conditioned problem for the identity check: a concentrated
    Gaussian start (used as f0 and mu) whose reference walk keeps essentially
    all mass inside the grid; nu is the walk's own terminal marginal."""
    states = np.linspace(lo, hi, n_states)
    center = 0.5 * (lo + hi)
    f0 = np.exp(-0.5 * ((states - center) / start_sd) ** 2)
    f0 /= f0.sum()
    prob = DiscreteMartingaleProblem(
        states=states, n_steps=n_steps, mu=f0, nu=f0, ref_var=step_sd**2, f0=f0
    )
    nu = reference_walk(prob).terminal()
    nu = _recenter(nu, states, float(f0 @ states))
    return DiscreteMartingaleProblem(
        states=states, n_steps=n_steps, mu=f0, nu=nu, ref_var=step_sd**2, f0=f0
    )
