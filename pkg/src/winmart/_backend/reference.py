"""Pure-NumPy simulation kernel (fallback when the compiled core is absent).

Both backends implement `run_chunk` with identical floating-point operation
order, so for state-independent volatilities (kind=FREE, plain multiply-add
updates) they produce bit-identical paths.  State-dependent kinds go through
sin/log/exp, whose last-ulp behaviour may differ between NumPy's vector math
and libm, so cross-backend agreement there is statistical, not bitwise.
Within one backend, results depend only on (inputs, seed), never on chunking
or worker count.
"""

from __future__ import annotations

import numpy as np

NAME = "reference"

KIND_SIN = 0   # dM = speed(t) * sin(pi*M) dB, clamped to [0,1], boundaries absorb
KIND_FREE = 1  # dX = speed(t) dB, unconstrained

IG_NONE = 0
IG_ANALYTIC = 1  # 0.5 * (S - log S - 1) dt with S = sigma(t, M)^2
IG_BASS = 2      # same integrand, S in log form from the driving Brownian value

_LOG_2PI = float(np.log(2.0 * np.pi))


def run_chunk(kind, integrand, speed, dts, sdts, aux0, aux1, z, x0, snap_idx, want_values):
    """Evolve one chunk of paths through all steps.

    z has shape (rows, n_steps): row p holds the normals of path p in step
    order.  Returns (values, m_last, integral, snap_m, snap_acc) where values
    is None unless requested, integral is the accumulated integrand per path,
    and snap_* sample the state / running integral at the node indices in
    snap_idx (sorted, in 0..n_steps).
    """
    rows, n_steps = z.shape
    m = np.full(rows, float(x0))
    acc = np.zeros(rows)
    n_snaps = len(snap_idx)
    snap_m = np.empty((rows, n_snaps))
    snap_acc = np.empty((rows, n_snaps))
    values = np.empty((rows, n_steps + 1)) if want_values else None
    if want_values:
        values[:, 0] = m
    si = 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        for k in range(n_steps):
            while si < n_snaps and snap_idx[si] == k:
                snap_m[:, si] = m
                snap_acc[:, si] = acc
                si += 1
            if kind == KIND_SIN:
                alive = (m > 0.0) & (m < 1.0)
                s = np.sin(np.pi * m)
                sig = speed[k] * s
                if integrand == IG_ANALYTIC:
                    big_s = sig * sig
                    safe = np.where(alive, big_s, 1.0)
                    acc += np.where(alive, 0.5 * (big_s - np.log(safe) - 1.0) * dts[k], 0.0)
                upd = np.clip(m + sig * sdts[k] * z[:, k], 0.0, 1.0)
                m = np.where(alive, upd, m)
            else:
                if integrand == IG_ANALYTIC:
                    big_s = speed[k] * speed[k]
                    acc += 0.5 * (big_s - np.log(big_s) - 1.0) * dts[k]
                elif integrand == IG_BASS:
                    w = m * aux1[k]
                    log_s = -_LOG_2PI - w * w - aux0[k]
                    acc += 0.5 * (np.exp(log_s) - log_s - 1.0) * dts[k]
                m = m + (speed[k] * sdts[k]) * z[:, k]
            if want_values:
                values[:, k + 1] = m
    while si < n_snaps:
        snap_m[:, si] = m
        snap_acc[:, si] = acc
        si += 1
    return values, m, acc, snap_m, snap_acc


def run_chunk_generic(sigma, eval_times, dts, sdts, z, x0, snap_idx, want_values, analytic_integrand):
    """Same contract as run_chunk for an arbitrary volatility callable.

    sigma(t, m_vector) must accept a scalar time and a vector of states and
    broadcast to a vector.  Win-martingale semantics: clamped to [0,1] with
    absorbing boundaries.  Only available in this backend; the compiled core
    delegates generic volatilities here.
    """
    rows, n_steps = z.shape
    m = np.full(rows, float(x0))
    acc = np.zeros(rows)
    n_snaps = len(snap_idx)
    snap_m = np.empty((rows, n_snaps))
    snap_acc = np.empty((rows, n_snaps))
    values = np.empty((rows, n_steps + 1)) if want_values else None
    if want_values:
        values[:, 0] = m
    si = 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        for k in range(n_steps):
            while si < n_snaps and snap_idx[si] == k:
                snap_m[:, si] = m
                snap_acc[:, si] = acc
                si += 1
            alive = (m > 0.0) & (m < 1.0)
            sig = np.broadcast_to(np.asarray(sigma(eval_times[k], m), dtype=np.float64), m.shape)
            if analytic_integrand:
                big_s = sig * sig
                safe = np.where(alive, big_s, 1.0)
                acc += np.where(alive, 0.5 * (big_s - np.log(safe) - 1.0) * dts[k], 0.0)
            upd = np.clip(m + sig * sdts[k] * z[:, k], 0.0, 1.0)
            m = np.where(alive, upd, m)
            if want_values:
                values[:, k + 1] = m
    while si < n_snaps:
        snap_m[:, si] = m
        snap_acc[:, si] = acc
        si += 1
    return values, m, acc, snap_m, snap_acc
