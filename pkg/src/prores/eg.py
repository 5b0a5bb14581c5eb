"""Eisenberg-Gale objective, its dual, and potential-dominance checks.

The primal objective over allocations is Psi(x) = sum_i e_i log u_i(x_i)
(maximized at equilibrium); the dual objective over prices is

    Upsilon(p) = max_x [ sum_i e_i log u_i(x_i) + sum_j p_j (1 - sum_i x_ij) ]

whose inner maximum is attained at the best-response spendings b(p), so it
evaluates in closed form as sum_i e_i log u_i(x(b(p), p)) + sum_j p_j -
sum_i e_i (minimized at equilibrium prices). Along proportional response
the Psi gap (substitutes side) and the Upsilon gap (complements side) are
dominated by the corresponding potential gap.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import ZeroPrice, ZeroUtility
from .market import MarketInstance, UtilityKind, best_response_spending, utility_value
from .potential import phi

_SLACK = 1e-9


def eg_objective(market: MarketInstance, x: np.ndarray) -> float:
    """Psi(x) = sum_i e_i log u_i(x_i)."""
    x = np.asarray(x, dtype=float)
    total = 0.0
    for i, buyer in enumerate(market.buyers):
        u = utility_value(buyer, x[i])
        if u <= 0.0:
            raise ZeroUtility(f"buyer {i} has zero utility")
        total += buyer.budget * np.log(u)
    return float(total)


def eg_dual(market: MarketInstance, p: np.ndarray) -> float:
    """Upsilon(p) via the closed-form inner maximizer b(p)."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise ZeroPrice("dual objective needs positive prices")
    total = 0.0
    for buyer in market.buyers:
        b_row = best_response_spending(buyer, p)
        u = utility_value(buyer, b_row / p)
        total += buyer.budget * np.log(u)
    return float(total + p.sum() - market.budgets.sum())


def psi_log_lower_bound(market: MarketInstance, b: np.ndarray) -> float:
    """Concavity (log-sum) lower bound on Psi(x(b)) for the substitutes
    side; exact for Cobb-Douglas rows and wherever a buyer's
    bang-per-spend ratios are constant across her support."""
    b = np.asarray(b, dtype=float)
    p = b.sum(axis=0)
    total = 0.0
    with np.errstate(divide="ignore"):
        logp = np.log(p)
        for i, buyer in enumerate(market.buyers):
            e = buyer.budget
            a = buyer.weights
            row = b[i]
            sup = row > 0
            if buyer.kind is UtilityKind.COBB_DOUGLAS:
                if np.any((a > 0) & ~sup):
                    return float("-inf")
                total += float(e * np.sum(a[sup] * (np.log(row[sup]) - logp[sup])))
                continue
            if buyer.kind in (UtilityKind.COMPLEMENTS, UtilityKind.LEONTIEF):
                raise ZeroUtility("log-sum bound applies to the substitutes side only")
            rho = market.rhos[i]
            if np.any(a[sup] == 0):
                return float("-inf")
            t = np.log(a[sup]) + (rho - 1.0) * np.log(row[sup]) - rho * logp[sup]
            total += float(row[sup] @ t) / rho + e / rho * np.log(e)
    return float(total)


def dominance_check(market: MarketInstance, spendings: np.ndarray,
                    reference: np.ndarray) -> list[dict]:
    """Per-iterate comparison of EG gaps with potential gaps.

    Substitutes rows of each iterate are swapped into the reference state
    (everything else pinned) for the Psi comparison; complements rows for
    the Upsilon comparison. Returns one row per iterate:
    {iter, phi_gap, psi_gap, upsilon_gap, dominates}.
    """
    spendings = np.asarray(spendings, dtype=float)
    reference = np.asarray(reference, dtype=float)
    subs = market.kind_mask(UtilityKind.LINEAR, UtilityKind.SUBSTITUTES)
    comp = market.kind_mask(UtilityKind.COMPLEMENTS, UtilityKind.LEONTIEF)
    ref_terms = phi(market, reference).per_buyer_terms
    psi_ref = eg_objective(market, reference / reference.sum(axis=0)) if subs.any() else None
    ups_ref = eg_dual(market, reference.sum(axis=0)) if comp.any() else None

    rows = []
    for t in range(spendings.shape[0]):
        b_t = spendings[t]
        phi_gap_total = 0.0
        psi_gap = float("nan")
        ups_gap = float("nan")
        ok = True
        if subs.any():
            state = reference.copy()
            state[subs] = b_t[subs]
            gap = float((phi(market, state).per_buyer_terms - ref_terms).sum())
            psi_gap = psi_ref - eg_objective(market, state / state.sum(axis=0))
            ok &= psi_gap <= gap + _SLACK
            phi_gap_total += gap
        if comp.any():
            state = reference.copy()
            state[comp] = b_t[comp]
            gap = float((ref_terms - phi(market, state).per_buyer_terms).sum())
            ups_gap = eg_dual(market, state.sum(axis=0)) - ups_ref
            ok &= ups_gap <= gap + _SLACK
            phi_gap_total += gap
        rows.append({
            "iter": t,
            "phi_gap": phi_gap_total,
            "psi_gap": psi_gap,
            "upsilon_gap": ups_gap,
            "dominates": bool(ok),
        })
    return rows


def write_dominance_csv(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "phi_gap", "psi_gap", "upsilon_gap", "dominates"])
        for r in rows:
            writer.writerow([
                r["iter"], format(r["phi_gap"], ".17g"), format(r["psi_gap"], ".17g"),
                format(r["upsilon_gap"], ".17g"), int(r["dominates"]),
            ])
