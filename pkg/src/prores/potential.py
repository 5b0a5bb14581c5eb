"""The market potential, its gradient, and the Bregman sandwich bounds.

For spending b with prices p_j = sum_i b_ij the potential is

    Phi(b) = - sum_{i: rho_i not in {0, -inf}} (1/rho_i) sum_j b_ij
                 * log(a_ij * b_ij**(rho_i - 1) / p_j**rho_i)
             - sum_{i: Leontief} sum_j b_ij * log(b_ij / (c_ij * p_j))
           [ + sum_{i: Cobb-Douglas} sum_j b_ij * log p_j ]

where the bracketed price term is the extended form required whenever
Cobb-Douglas buyers are present (their base-form terms are infinite).
Substitutes-only markets minimize Phi at equilibrium, complements-only
markets maximize it, and mixed markets have their equilibrium at a saddle
point: convex in the spending of the rho >= 0 buyers, concave in the
spending of the rho < 0 ones.

The Bregman gap of Phi between two states is sandwiched between weighted
sums of the per-buyer KL divergences; `sandwich_gap` returns all three
quantities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .bregman import kl
from .errors import CobbDouglasRequiresExtended, ComplementsBoundarySpending, ZeroPrice
from .market import MarketInstance, UtilityKind


@dataclass(frozen=True)
class PotentialValue:
    """Potential total plus its per-buyer decomposition.

    phi equals per_buyer_terms.sum(); extended reports whether the
    Cobb-Douglas price term is part of the evaluation.
    """

    phi: float
    per_buyer_terms: np.ndarray
    extended: bool


def _resolve_extended(market: MarketInstance, extended: bool | None) -> bool:
    has_cd = market.has_cobb_douglas
    if extended is None:
        return has_cd
    if has_cd and not extended:
        raise CobbDouglasRequiresExtended(
            "market has Cobb-Douglas buyers; the base-form potential is infinite"
        )
    return extended


def _check_prices(b: np.ndarray) -> np.ndarray:
    p = np.asarray(b, dtype=float).sum(axis=0)
    if np.any(p <= 0.0):
        raise ZeroPrice("potential needs strictly positive prices")
    return p


def phi(market: MarketInstance, b: np.ndarray, extended: bool | None = None) -> PotentialValue:
    """Evaluate the potential with the 0*log 0 = 0 boundary convention.

    A complements buyer with zero spending on a positively weighted good is
    rejected: the dynamics never produce such states from interior starts
    and the gradient is undefined there.
    """
    use_ext = _resolve_extended(market, extended)
    b = np.asarray(b, dtype=float)
    _check_prices(b)
    terms = _kernels.phi_terms(b, market.kinds, market.rhos, market.weights, use_ext)
    if np.any(np.isnan(terms)):
        i = int(np.argmax(np.isnan(terms)))
        raise ComplementsBoundarySpending(
            f"buyer {i}: zero spending on a desired good in a complements row"
        )
    return PotentialValue(phi=float(terms.sum()), per_buyer_terms=terms, extended=use_ext)


def grad_phi(market: MarketInstance, b: np.ndarray, extended: bool | None = None) -> np.ndarray:
    """Gradient of the potential w.r.t. every spending entry.

    Rows: (1/rho)(1 - log(a_ij b_ij**(rho-1) / p_j**rho)) for finite
    rho != 0, -log(b_ij / (c_ij p_j)) for Leontief, and 1 + log p_j for
    Cobb-Douglas (extended form). Boundary entries come out infinite.
    """
    use_ext = _resolve_extended(market, extended)
    b = np.asarray(b, dtype=float)
    p = _check_prices(b)
    logp = np.log(p)
    with np.errstate(divide="ignore", invalid="ignore"):
        logb = np.log(b)
        logw = np.log(market.weights)
        out = np.empty_like(b)
        for i, buyer in enumerate(market.buyers):
            if buyer.kind is UtilityKind.COBB_DOUGLAS:
                if not use_ext:
                    raise CobbDouglasRequiresExtended("gradient needs the extended form")
                out[i] = 1.0 + logp
            elif buyer.kind is UtilityKind.LEONTIEF:
                out[i] = -(logb[i] - logw[i] - logp)
            else:
                rho = market.rhos[i]
                out[i] = (1.0 - logw[i] - (rho - 1.0) * logb[i] + rho * logp) / rho
    return out


def phi_gap(market: MarketInstance, b: np.ndarray, b_ref: np.ndarray,
            extended: bool | None = None) -> float:
    """Phi(b) - Phi(b_ref), summed per-buyer-termwise to limit cancellation."""
    t1 = phi(market, b, extended).per_buyer_terms
    t2 = phi(market, b_ref, extended).per_buyer_terms
    return float((t1 - t2).sum())


@dataclass(frozen=True)
class SandwichGap:
    gap: float
    lower: float
    upper: float


def sandwich_gap(market: MarketInstance, b: np.ndarray, b_prime: np.ndarray,
                 extended: bool | None = None) -> SandwichGap:
    """Bregman gap of Phi at (b, b_prime) with its two-sided KL bounds.

    gap   = Phi(b) - Phi(b') - <grad Phi(b'), b - b'>
    lower = sum_{finite rho != 0} ((1 - rho_i)/rho_i) KL_i - sum_{Leontief} KL_i
    upper = sum_{finite rho != 0} (1/rho_i) KL_i [+ sum_{Cobb-Douglas} KL_i]

    where KL_i = KL(b_i || b'_i). The contract lower <= gap <= upper holds
    for every pair with b' interior.
    """
    use_ext = _resolve_extended(market, extended)
    b = np.asarray(b, dtype=float)
    b_prime = np.asarray(b_prime, dtype=float)
    gap = (
        phi_gap(market, b, b_prime, use_ext)
        - float(np.vdot(grad_phi(market, b_prime, use_ext), b - b_prime))
    )
    lower = 0.0
    upper = 0.0
    for i, buyer in enumerate(market.buyers):
        d = kl(b[i], b_prime[i])
        if buyer.kind is UtilityKind.LEONTIEF:
            lower -= d
            upper += 0.0
        elif buyer.kind is UtilityKind.COBB_DOUGLAS:
            upper += d
        else:
            rho = market.rhos[i]
            lower += (1.0 - rho) / rho * d
            upper += d / rho
    return SandwichGap(gap=gap, lower=lower, upper=upper)
