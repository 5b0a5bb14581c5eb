"""Pure-numpy implementation of the hot per-round kernels.

Kind codes: 0 linear, 1 substitutes CES, 2 Cobb-Douglas, 3 complements CES,
4 Leontief. All power terms are evaluated in log space with per-row max
subtraction before exponentiation; rho/(1-rho)-type exponents otherwise
overflow for rho near the ends of its range.

Update modes: 0 proportional response (per-class dispatch), 1 damped
(geometric mean with the current spending), 2 generalized (the
substitutes-form rule applied to every row regardless of the sign of rho).
"""

import numpy as np

MODE_PR = 0
MODE_DAMPED = 1
MODE_GENERALIZED = 2


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


def step_round(b, kinds, rhos, weights, budgets, mode):
    b = np.asarray(b, dtype=float)
    m, n = b.shape
    p = b.sum(axis=0)
    logp = _log(p)
    logb = _log(b)
    logw = _log(weights)
    out = np.empty_like(b)
    with np.errstate(invalid="ignore"):
        for i in range(m):
            kind = kinds[i]
            rho = rhos[i]
            if mode == MODE_GENERALIZED:
                s = logw[i] + rho * (logb[i] - logp)
            elif kind == 2:
                if mode == MODE_PR:
                    out[i] = budgets[i] * weights[i]
                    continue
                s = 0.5 * (logb[i] + logw[i])
            elif kind == 4:
                s = logw[i] + logp
                if mode == MODE_DAMPED:
                    s = 0.5 * (logb[i] + s)
            elif kind == 3:
                s = (logw[i] - rho * logp) / (1.0 - rho)
                if mode == MODE_DAMPED:
                    s = 0.5 * (logb[i] + s)
            else:  # linear or substitutes
                s = logw[i] + rho * (logb[i] - logp)
                if mode == MODE_DAMPED:
                    s = 0.5 * (logb[i] + s)
            top = s.max()
            if top == -np.inf:
                out[i] = np.nan
                continue
            w = np.exp(s - top)
            out[i] = budgets[i] * w / w.sum()
    return out


def phi_terms(b, kinds, rhos, weights, extended):
    """Per-buyer contributions to the potential; the total is their sum.

    Returns NaN for a complements (kind 3) buyer with zero spending on a
    positively weighted good: the caller treats that state as invalid.
    """
    b = np.asarray(b, dtype=float)
    m, n = b.shape
    p = b.sum(axis=0)
    logp = _log(p)
    terms = np.empty(m)
    with np.errstate(invalid="ignore"):
        for i in range(m):
            kind = kinds[i]
            rho = rhos[i]
            bi = b[i]
            wi = weights[i]
            pos = bi > 0.0
            if kind == 2:
                terms[i] = float(bi @ logp) if extended else np.nan
                continue
            if kind == 4:
                contrib = bi[pos] * (np.log(bi[pos]) - _log(wi[pos]) - logp[pos])
                terms[i] = -float(contrib.sum())
                continue
            if kind == 3 and np.any(~pos & (wi > 0.0)):
                terms[i] = np.nan
                continue
            t = _log(wi[pos]) + (rho - 1.0) * np.log(bi[pos]) - rho * logp[pos]
            terms[i] = -float((bi[pos] * t).sum()) / rho
    return terms
