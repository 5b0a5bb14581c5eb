"""Entropy kernel, KL divergence, and the generic entropic mirror step.

The only concrete Bregman kernel here is the (weighted) entropy
h(b) = sum_i gamma_i sum_j (b_ij log b_ij - b_ij), whose divergence on the
product of budget simplices is the weighted KL divergence
sum_i gamma_i KL(b_i || b'_i). A numeric argmin oracle and a strong
Bregman convexity probe are included for cross-checking closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NoConvergence, SupportMismatch

_SUM_TOL = 1e-9


def kl(x: np.ndarray, y: np.ndarray) -> float:
    """KL(x || y) = sum_j x_j log(x_j / y_j), with 0 log 0 = 0.

    Defined for nonnegative x and y with equal totals (checked to 1e-9
    relative); x must vanish wherever y does.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sx, sy = float(x.sum()), float(y.sum())
    if abs(sx - sy) > _SUM_TOL * max(abs(sx), abs(sy), 1.0):
        raise ValueError(f"KL needs equal totals, got {sx!r} vs {sy!r}")
    pos = x > 0.0
    if np.any(pos & (y <= 0.0)):
        raise SupportMismatch("x puts mass where y has none")
    val = float(np.sum(x[pos] * np.log(x[pos] / y[pos])))
    return val if val > 0.0 else 0.0


def kl_matrix(x: np.ndarray, y: np.ndarray, gamma: np.ndarray | None = None) -> float:
    """sum_i gamma_i KL(x_i || y_i) over the rows of two spending matrices."""
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    if gamma is None:
        gamma = np.ones(m)
    return float(sum(gamma[i] * kl(x[i], y[i]) for i in range(m)))


@dataclass(frozen=True)
class EntropyKernel:
    """Weighted entropy kernel over per-buyer spending rows."""

    gamma: np.ndarray

    def divergence(self, x: np.ndarray, y: np.ndarray) -> float:
        return kl_matrix(x, y, np.asarray(self.gamma, dtype=float))

    def generator(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        """h(x) and its gradient; h's own Bregman gap is the divergence."""
        x = np.asarray(x, dtype=float)
        g = np.asarray(self.gamma, dtype=float)[:, None]
        pos = x > 0.0
        xlogx = np.zeros_like(x)
        xlogx[pos] = x[pos] * np.log(x[pos])
        value = float((g * (xlogx - x)).sum())
        with np.errstate(divide="ignore"):
            grad = g * np.log(x)
        return value, grad


@dataclass(frozen=True)
class StrongConvexityEstimate:
    sigma_hat: float
    L_hat: float
    sample_count: int


def entropic_md_step(grad_row: np.ndarray, current_row: np.ndarray,
                     step_scale: float, budget: float) -> np.ndarray:
    """Minimize <grad, b - current> + (1/step_scale) KL(b || current) over
    the budget simplex.

    Closed form b_j proportional to current_j * exp(-step_scale * grad_j),
    normalized to the budget; evaluated in log space with max subtraction.
    Zero entries of current_row stay zero.
    """
    if step_scale <= 0 or budget <= 0:
        raise ValueError("step_scale and budget must be positive")
    current_row = np.asarray(current_row, dtype=float)
    grad_row = np.asarray(grad_row, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = np.where(current_row > 0.0,
                        np.log(current_row) - step_scale * grad_row, -np.inf)
    top = logw.max()
    if top == -np.inf:
        raise ValueError("current_row has no positive entries")
    w = np.exp(logw - top)
    return budget * w / w.sum()


def numeric_argmin_oracle(objective: Callable[[np.ndarray], float],
                          grad: Callable[[np.ndarray], np.ndarray],
                          budget: float,
                          start: np.ndarray | None = None,
                          n: int | None = None,
                          tol: float = 1e-10,
                          max_iters: int = 200_000) -> np.ndarray:
    """Minimize a convex objective over the budget simplex by exponentiated
    gradient with backtracking, to a first-order (KKT) residual <= tol.

    Test-support code: slow but independent of any closed form. The
    residual is max(max_j x_j |g_j - nu| / budget, max_j (nu - g_j)) with
    nu = <x, g> / budget, which vanishes exactly at KKT points of the
    simplex-constrained problem.
    """
    if start is None:
        if n is None:
            raise ValueError("need start or n")
        x = np.full(n, budget / n)
    else:
        x = np.asarray(start, dtype=float).copy()
        x = budget * x / x.sum()
    def residual(xv, gv):
        pos = xv > 0.0
        nu = float(xv[pos] @ gv[pos]) / budget
        primal = float(np.max(xv[pos] * np.abs(gv[pos] - nu))) / budget
        dual = float(np.max(nu - gv))  # +inf flags mass wrongly driven to zero
        return max(primal, dual)

    def done(xv):
        if objective(xv) > f0 + 1e-12 * (1.0 + abs(f0)):
            raise NoConvergence("argmin oracle: stationary point above the start value")
        return xv

    # Objective values cancel near the optimum, so the line search accepts
    # on the KKT residual instead: reject steps that more than double it.
    f0 = objective(x)
    g = grad(x)
    r = residual(x, g)
    best, since_best = r, 0
    eta = 0.5
    for _ in range(max_iters):
        if r <= tol:
            return done(x)
        x_new = entropic_md_step(g, x, eta, budget)
        g_new = grad(x_new)
        r_new = residual(x_new, g_new)
        if r_new > 2.0 * r and r_new > tol:
            eta *= 0.5
            if eta < 1e-14:
                break
            continue
        x, g, r = x_new, g_new, r_new
        if r < best:
            best, since_best = r, 0
        else:
            since_best += 1
            if since_best > 500:
                eta *= 0.5
                since_best = 0
                if eta < 1e-14:
                    break
    if r <= tol:
        return done(x)
    raise NoConvergence(f"argmin oracle: residual {r:.3g} above {tol}")


def dirichlet_spending_sampler(budgets: np.ndarray, n: int, floor: float = 1e-9):
    """Sampler factory for probe points: Dirichlet(1,..,1) rows scaled to
    each budget, clamped away from the boundary and renormalized."""
    budgets = np.asarray(budgets, dtype=float)

    def sample(rng: np.random.Generator) -> np.ndarray:
        rows = rng.dirichlet(np.ones(n), size=budgets.shape[0])
        rows = np.maximum(rows, floor)
        rows = rows / rows.sum(axis=1, keepdims=True)
        return rows * budgets[:, None]

    return sample


def strong_bregman_probe(f: Callable[[np.ndarray], tuple[float, np.ndarray]],
                         kernel: EntropyKernel,
                         domain_sampler: Callable[[np.random.Generator], np.ndarray],
                         samples: int,
                         rng: np.random.Generator | None = None) -> StrongConvexityEstimate:
    """Empirical (sigma, L) estimate: min and max over sampled pairs of

        (f(x) - f(y) - <grad f(y), x - y>) / d(x, y).

    Pairs with divergence below 1e-14 are degenerate and skipped. For an
    (sigma, L)-strongly Bregman convex f w.r.t. the kernel the estimates
    land inside [sigma, L].
    """
    if rng is None:
        rng = np.random.default_rng(0)
    lo, hi = np.inf, -np.inf
    used = 0
    for _ in range(50 * samples):
        if used >= samples:
            break
        x = domain_sampler(rng)
        y = domain_sampler(rng)
        d = kernel.divergence(x, y)
        if d < 1e-14:
            continue
        fx, _ = f(x)
        fy, gy = f(y)
        r = (fx - fy - float(np.vdot(gy, x - y))) / d
        lo = min(lo, r)
        hi = max(hi, r)
        used += 1
    if used < samples:
        raise ValueError("sampler produced too many degenerate pairs")
    return StrongConvexityEstimate(sigma_hat=float(lo), L_hat=float(hi), sample_count=used)
