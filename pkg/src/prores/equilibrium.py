"""Equilibrium oracle and first-order-condition verification.

`solve` runs the damped update from uniform spending until the potential
stagnates, then hands the final state to `verify`, which checks the
equilibrium conditions directly: market clearing plus, per buyer class,

* linear: spending only on goods maximizing a_ij / p_j (complementary
  slackness up to tolerance),
* Cobb-Douglas: b_ij = e_i a_ij,
* Leontief: b_ij / (c_ij p_j) constant on the support,
* CES: the row equals the best response to the prices.

Verification is independent of the trajectory that produced the state; it
only interrogates the conditions above. Spending equilibria of pure
linear or pure Leontief markets are not unique, so callers should compare
such markets in prices and potential gap, not spending distance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dynamics import damped_pr_step
from .errors import NotConverged
from .market import (
    MarketInstance,
    UtilityKind,
    best_response_spending,
    check_spending,
    prices,
    uniform_spending,
)
from .potential import phi

_STAGNANT_ROUNDS = 50


@dataclass
class EquilibriumCertificate:
    spending: np.ndarray
    prices: np.ndarray
    clearing_residual: float
    br_residual: float
    lam: np.ndarray
    tol: float
    valid: bool
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "spending": self.spending.tolist(),
            "prices": self.prices.tolist(),
            "clearing_residual": self.clearing_residual,
            "br_residual": self.br_residual,
            "lambda": self.lam.tolist(),
            "valid": self.valid,
        }

    def to_json(self, path, manifest: dict | None = None) -> None:
        doc = self.to_dict()
        if manifest is not None:
            doc["manifest"] = manifest
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
            fh.write("\n")


def load_spending(path) -> np.ndarray:
    """Read the spending matrix out of a certificate JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return np.asarray(doc["spending"], dtype=float)


def _linear_residual(buyer, row: np.ndarray, p: np.ndarray, tol: float) -> tuple[float, float]:
    bang = np.where(buyer.weights > 0, buyer.weights / p, -np.inf)
    top = float(bang.max())
    support = row > tol * buyer.budget
    gap = 0.0
    if support.any():
        gap = float(np.max(top - bang[support]))
    return max(gap, 0.0), top


def verify(market: MarketInstance, spending: np.ndarray, tol: float = 1e-6) -> EquilibriumCertificate:
    """Residuals of the equilibrium conditions at a spending state.

    Never raises on a bad state; the caller judges the residuals. `valid`
    means both residuals are within `tol`.
    """
    b = check_spending(market, spending)
    p = prices(b)
    clearing = float(np.max(np.abs(b.sum(axis=0) / p - 1.0)))
    br_residual = 0.0
    lam = np.empty(market.m)
    for i, buyer in enumerate(market.buyers):
        row = b[i]
        if buyer.kind is UtilityKind.LINEAR:
            gap, top = _linear_residual(buyer, row, p, tol)
            br_residual = max(br_residual, gap)
            lam[i] = top
            continue
        target = best_response_spending(buyer, p)
        br_residual = max(br_residual, float(np.max(np.abs(row - target))))
        sup = buyer.support
        if buyer.kind is UtilityKind.COBB_DOUGLAS:
            ratios = row[sup] / buyer.weights[sup]
        elif buyer.kind is UtilityKind.LEONTIEF:
            ratios = row[sup] / (buyer.weights[sup] * p[sup])
        else:
            rho = buyer.rho
            with np.errstate(divide="ignore"):
                ratios = np.where(
                    row[sup] > 0,
                    row[sup] ** (1.0 - rho) * p[sup] ** rho / buyer.weights[sup],
                    np.nan,
                )
            ratios = ratios[~np.isnan(ratios)]
        lam[i] = float(np.median(ratios)) if ratios.size else float("nan")
    return EquilibriumCertificate(
        spending=b.copy(), prices=p, clearing_residual=clearing,
        br_residual=br_residual, lam=lam, tol=tol,
        valid=bool(clearing <= tol and br_residual <= tol),
    )


def solve(market: MarketInstance, tol: float = 1e-10, max_iters: int = 200_000,
          check_tol: float = 1e-6, initial: np.ndarray | None = None) -> EquilibriumCertificate:
    """Find an equilibrium by iterating the damped update until the
    potential moves less than tol*(1+|Phi|) for 50 consecutive rounds.

    Cobb-Douglas rows are snapped to their closed form e_i a_ij before
    verification. Raises NotConverged (certificate attached) if the cap
    is hit and the state still fails verification at `check_tol`; pure
    linear and pure Leontief markets can land here because their spending
    equilibria are not unique, while prices still converge.
    """
    b = uniform_spending(market) if initial is None else check_spending(
        market, np.array(initial, dtype=float))
    phi_prev = phi(market, b).phi
    quiet = 0
    iterations = max_iters
    for t in range(1, max_iters + 1):
        b = damped_pr_step(market, b)
        phi_t = phi(market, b).phi
        if abs(phi_t - phi_prev) < tol * (1.0 + abs(phi_t)):
            quiet += 1
            if quiet >= _STAGNANT_ROUNDS:
                iterations = t
                break
        else:
            quiet = 0
        phi_prev = phi_t
    cd = market.kind_mask(UtilityKind.COBB_DOUGLAS)
    if cd.any():
        b = b.copy()
        b[cd] = market.budgets[cd, None] * market.weights[cd]
    cert = verify(market, b, tol=check_tol)
    cert.iterations = iterations
    if iterations == max_iters and not cert.valid:
        raise NotConverged(
            f"no equilibrium at tolerance {check_tol} within {max_iters} rounds "
            f"(clearing {cert.clearing_residual:.3g}, best-response {cert.br_residual:.3g})",
            certificate=cert,
        )
    return cert
