# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of the fallback kernels; same semantics, C loops.

Kept in lockstep with _fallback.py: any change there must land here too.
"""

from libc.math cimport exp, log, INFINITY, NAN

import numpy as np
cimport numpy as cnp

MODE_PR = 0
MODE_DAMPED = 1
MODE_GENERALIZED = 2

cdef int _PR = 0
cdef int _DAMPED = 1
cdef int _GENERALIZED = 2


cdef inline double _xlog(double v) nogil:
    if v > 0.0:
        return log(v)
    return -INFINITY


def step_round(object b_in, object kinds_in, object rhos_in, object weights_in,
               object budgets_in, int mode):
    cdef const double[:, ::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef const cnp.int64_t[::1] kinds = np.ascontiguousarray(kinds_in, dtype=np.int64)
    cdef const double[::1] rhos = np.ascontiguousarray(rhos_in, dtype=np.float64)
    cdef const double[:, ::1] weights = np.ascontiguousarray(weights_in, dtype=np.float64)
    cdef const double[::1] budgets = np.ascontiguousarray(budgets_in, dtype=np.float64)

    cdef Py_ssize_t m = b.shape[0]
    cdef Py_ssize_t n = b.shape[1]
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    logp_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] logp = logp_arr
    s_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] s = s_arr

    cdef Py_ssize_t i, j
    cdef double acc, rho, top, wsum, v
    cdef cnp.int64_t kind

    with nogil:
        for j in range(n):
            acc = 0.0
            for i in range(m):
                acc += b[i, j]
            logp[j] = _xlog(acc)

        for i in range(m):
            kind = kinds[i]
            rho = rhos[i]
            if mode == _PR and kind == 2:
                for j in range(n):
                    out[i, j] = budgets[i] * weights[i, j]
                continue
            for j in range(n):
                if mode == _GENERALIZED:
                    s[j] = _xlog(weights[i, j]) + rho * (_xlog(b[i, j]) - logp[j])
                elif kind == 2:
                    s[j] = 0.5 * (_xlog(b[i, j]) + _xlog(weights[i, j]))
                elif kind == 4:
                    v = _xlog(weights[i, j]) + logp[j]
                    s[j] = 0.5 * (_xlog(b[i, j]) + v) if mode == _DAMPED else v
                elif kind == 3:
                    v = (_xlog(weights[i, j]) - rho * logp[j]) / (1.0 - rho)
                    s[j] = 0.5 * (_xlog(b[i, j]) + v) if mode == _DAMPED else v
                else:
                    v = _xlog(weights[i, j]) + rho * (_xlog(b[i, j]) - logp[j])
                    s[j] = 0.5 * (_xlog(b[i, j]) + v) if mode == _DAMPED else v
            top = -INFINITY
            for j in range(n):
                if s[j] > top:
                    top = s[j]
            if top == -INFINITY:
                for j in range(n):
                    out[i, j] = NAN
                continue
            wsum = 0.0
            for j in range(n):
                s[j] = exp(s[j] - top)
                wsum += s[j]
            for j in range(n):
                out[i, j] = budgets[i] * s[j] / wsum
    return out_arr


def phi_terms(object b_in, object kinds_in, object rhos_in, object weights_in,
              bint extended):
    cdef const double[:, ::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef const cnp.int64_t[::1] kinds = np.ascontiguousarray(kinds_in, dtype=np.int64)
    cdef const double[::1] rhos = np.ascontiguousarray(rhos_in, dtype=np.float64)
    cdef const double[:, ::1] weights = np.ascontiguousarray(weights_in, dtype=np.float64)

    cdef Py_ssize_t m = b.shape[0]
    cdef Py_ssize_t n = b.shape[1]
    terms_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] terms = terms_arr
    logp_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] logp = logp_arr

    cdef Py_ssize_t i, j
    cdef double acc, rho, bij
    cdef cnp.int64_t kind
    cdef bint bad

    with nogil:
        for j in range(n):
            acc = 0.0
            for i in range(m):
                acc += b[i, j]
            logp[j] = _xlog(acc)

        for i in range(m):
            kind = kinds[i]
            rho = rhos[i]
            if kind == 2:
                if not extended:
                    terms[i] = NAN
                    continue
                acc = 0.0
                for j in range(n):
                    acc += b[i, j] * logp[j]
                terms[i] = acc
                continue
            if kind == 4:
                acc = 0.0
                for j in range(n):
                    bij = b[i, j]
                    if bij > 0.0:
                        acc += bij * (log(bij) - _xlog(weights[i, j]) - logp[j])
                terms[i] = -acc
                continue
            if kind == 3:
                bad = 0
                for j in range(n):
                    if b[i, j] == 0.0 and weights[i, j] > 0.0:
                        bad = 1
                        break
                if bad:
                    terms[i] = NAN
                    continue
            acc = 0.0
            for j in range(n):
                bij = b[i, j]
                if bij > 0.0:
                    acc += bij * (_xlog(weights[i, j]) + (rho - 1.0) * log(bij) - rho * logp[j])
            terms[i] = -acc / rho
    return terms_arr
