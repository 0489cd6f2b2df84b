# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernel.

Scalar twin of reference.run_chunk: one tight loop per path instead of one
vectorized pass per step.  The win-martingale kind additionally exits a
path's loop as soon as it is absorbed, which the vectorized fallback cannot
do.  Operation order matches the reference so that pure multiply-add kinds
agree bitwise; sin/log/exp kinds agree up to vector-math rounding.
"""

import numpy as np

from libc.math cimport exp, log, sin

NAME = "fastpath"

KIND_SIN = 0
KIND_FREE = 1

IG_NONE = 0
IG_ANALYTIC = 1
IG_BASS = 2

cdef double PI = 3.141592653589793
cdef double LOG_2PI = 1.8378770664093453
cdef int C_KIND_SIN = 0
cdef int C_IG_ANALYTIC = 1
cdef int C_IG_BASS = 2


def run_chunk(int kind, int integrand,
              double[::1] speed, double[::1] dts, double[::1] sdts,
              double[::1] aux0, double[::1] aux1,
              double[:, ::1] z, double x0,
              long[::1] snap_idx, bint want_values):
    cdef Py_ssize_t rows = z.shape[0]
    cdef Py_ssize_t n_steps = z.shape[1]
    cdef Py_ssize_t n_snaps = snap_idx.shape[0]

    m_arr = np.empty(rows)
    acc_arr = np.empty(rows)
    snap_m_arr = np.empty((rows, n_snaps))
    snap_acc_arr = np.empty((rows, n_snaps))
    values_arr = np.empty((rows, n_steps + 1)) if want_values else None

    cdef double[::1] m_last = m_arr
    cdef double[::1] integral = acc_arr
    cdef double[:, ::1] snap_m = snap_m_arr
    cdef double[:, ::1] snap_acc = snap_acc_arr
    cdef double[:, ::1] values
    if want_values:
        values = values_arr

    cdef Py_ssize_t p, k, j, si
    cdef double m, acc, s, sig, big_s, w, log_s
    cdef bint absorbed

    with nogil:
        for p in range(rows):
            m = x0
            acc = 0.0
            si = 0
            absorbed = False
            if want_values:
                values[p, 0] = m
            for k in range(n_steps):
                while si < n_snaps and snap_idx[si] == k:
                    snap_m[p, si] = m
                    snap_acc[p, si] = acc
                    si += 1
                if kind == C_KIND_SIN:
                    if m <= 0.0 or m >= 1.0:
                        absorbed = True
                        break
                    s = sin(PI * m)
                    sig = speed[k] * s
                    if integrand == C_IG_ANALYTIC:
                        big_s = sig * sig
                        acc += 0.5 * (big_s - log(big_s) - 1.0) * dts[k]
                    m = m + sig * sdts[k] * z[p, k]
                    if m < 0.0:
                        m = 0.0
                    elif m > 1.0:
                        m = 1.0
                else:
                    if integrand == C_IG_ANALYTIC:
                        big_s = speed[k] * speed[k]
                        acc += 0.5 * (big_s - log(big_s) - 1.0) * dts[k]
                    elif integrand == C_IG_BASS:
                        w = m * aux1[k]
                        log_s = -LOG_2PI - w * w - aux0[k]
                        acc += 0.5 * (exp(log_s) - log_s - 1.0) * dts[k]
                    m = m + (speed[k] * sdts[k]) * z[p, k]
                if want_values:
                    values[p, k + 1] = m
            if absorbed and want_values:
                # freeze the remaining trajectory at the boundary
                for j in range(k + 1, n_steps + 1):
                    values[p, j] = m
            while si < n_snaps:
                snap_m[p, si] = m
                snap_acc[p, si] = acc
                si += 1
            m_last[p] = m
            integral[p] = acc

    return values_arr, m_arr, acc_arr, snap_m_arr, snap_acc_arr
