"""Theoretical convergence bounds confronted with simulated trajectories.

Every certificate compares a bound series (a function of the round index
T, the per-buyer KL distances from the start to the reference equilibrium,
and a strong-convexity constant sigma where one exists) against the
empirically measured potential-gap series of a trajectory. The bound holds
when the empirical value stays below the bound at every recorded round, up
to an additive slack of 1e-9 * (1 + |bound|) absorbing float rounding; a
genuine violation exceeds that by orders of magnitude.

Certificate identifiers and the inequalities they check
(KL0_i = KL(ref_i || b0_i), gap_T = Phi(b_T) - Phi(ref) on the
substitutes side and its negative on the complements side):

  subst-1t           gap_T <= (1/T) sum_i (1/rho_i) KL0_i
  subst-strong       gap_T <= sigma (1-sigma)^T / (1-(1-sigma)^T) * same sum,
                     sigma = min_i (1 - rho_i)
  comp-1t            -gap_T <= (1/T) sum_i ((rho_i-1)/rho_i) KL0_i,
                     with (rho-1)/rho := 1 for Leontief
  comp-strong        same shape, sigma = min_i 1/(1 - rho_i)
  kl-contraction           sum_i (1/rho_i) KL(ref_i || b_t_i)
                         <= (max_i rho_i)^t * initial sum
  saddle-sublinear   sum_{t<=T} r_t <= 2 d_g(ref, b0) + 2 d_h(ref, b0)
  saddle-linear      r_T <= (1 - min(sx, sy)/2)^(T-1)
                         * ((2-sx) d_g + (2-sy) d_h)
  cobb-subst-1t      pinned gap_T <= (1/T)(sum_{rho>0} KL0/rho + sum_cd KL0)
  cobb-subst-strong  sigma = min 1/rho; <= (sigma-1)/(sigma^T - 1) * plain sums
  cobb-comp-1t/-strong   mirror images on the complements side
  full-range-1t      cumulative pinned residual <= 4 sum_cd KL0
                         + sum 2(rho-1)/rho KL0 + sum 2/rho KL0 + sum_leon KL0
  full-range-linear  residual_T <= sigma^-(T-1) [4/(2-sigma) sum_cd KL0
                         + sum (2rho-1)/rho KL0 + sum (1+rho)/rho KL0],
                     sigma = min(min 2/(1+rho), min 2(rho-1)/(2rho-1))
  spending-kl        the per-iterate spending/price KL vs potential-gap
                     inequalities of the applicable domain

The saddle residual r_t is Phi with the substitutes block of round t
swapped into the reference minus Phi with the complements block swapped
in; Cobb-Douglas rows stay pinned at the reference on both sides.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .bregman import kl
from .errors import WrongDomain
from .market import MarketInstance, UtilityKind, uniform_spending
from .potential import phi

SLACK = 1e-9

THEOREM_IDS = (
    "subst-1t", "subst-strong", "comp-1t", "comp-strong",
    "saddle-sublinear", "saddle-linear",
    "cobb-subst-1t", "cobb-subst-strong", "cobb-comp-1t", "cobb-comp-strong",
    "full-range-1t", "full-range-linear", "kl-contraction", "spending-kl",
)


@dataclass
class RateCertificate:
    theorem_id: str
    sigma: float | None
    bound_series: np.ndarray
    empirical_series: np.ndarray
    holds: bool
    max_violation: float
    t_start: int = 1

    def to_dict(self, series_csv_path: str | None = None) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "sigma": self.sigma,
            "T_max": int(self.t_start + len(self.bound_series) - 1),
            "holds": self.holds,
            "max_violation": self.max_violation,
            "series_csv_path": series_csv_path,
        }

    def to_json(self, path, series_csv_path: str | None = None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(series_csv_path), fh)
            fh.write("\n")

    def write_series_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["T", "bound", "empirical"])
            for k in range(len(self.bound_series)):
                writer.writerow([
                    self.t_start + k,
                    format(self.bound_series[k], ".17g"),
                    format(self.empirical_series[k], ".17g"),
                ])


def _certificate(theorem_id, sigma, bound, empirical, t_start=1,
                 extra_ok=True) -> RateCertificate:
    bound = np.asarray(bound, dtype=float)
    empirical = np.asarray(empirical, dtype=float)
    viol = empirical - bound
    holds = bool(np.all(empirical <= bound + SLACK * (1.0 + np.abs(bound))) and extra_ok)
    return RateCertificate(
        theorem_id=theorem_id, sigma=sigma, bound_series=bound,
        empirical_series=empirical, holds=holds,
        max_violation=float(viol.max()) if viol.size else 0.0, t_start=t_start,
    )


# ---------------------------------------------------------------------------
# Domain plumbing

def _kinds(market: MarketInstance) -> set[UtilityKind]:
    return {b.kind for b in market.buyers}


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise WrongDomain(msg)


def _weighted_kl0(market: MarketInstance, reference, b0, weight_fn) -> float:
    total = 0.0
    for i, buyer in enumerate(market.buyers):
        w = weight_fn(buyer, market.rhos[i])
        if w:
            total += w * kl(reference[i], b0[i])
    return total


def _subs_weight(buyer, rho):
    return 1.0 / rho if buyer.kind in (UtilityKind.LINEAR, UtilityKind.SUBSTITUTES) else 0.0


def _comp_weight(buyer, rho):
    if buyer.kind is UtilityKind.LEONTIEF:
        return 1.0
    if buyer.kind is UtilityKind.COMPLEMENTS:
        return (rho - 1.0) / rho
    return 0.0


def _cd_weight(buyer, rho):
    return 1.0 if buyer.kind is UtilityKind.COBB_DOUGLAS else 0.0


def _phi_terms(market, b):
    return phi(market, b).per_buyer_terms


def saddle_residual(market: MarketInstance, b_t: np.ndarray,
                    reference: np.ndarray) -> float:
    """Phi(subs block of b_t, rest of reference) - Phi(reference with the
    complements block of b_t); Cobb-Douglas rows pinned at the reference."""
    subs = market.kind_mask(UtilityKind.LINEAR, UtilityKind.SUBSTITUTES)
    comp = market.kind_mask(UtilityKind.COMPLEMENTS, UtilityKind.LEONTIEF)
    left = reference.copy()
    left[subs] = b_t[subs]
    right = reference.copy()
    right[comp] = b_t[comp]
    return float((_phi_terms(market, left) - _phi_terms(market, right)).sum())


def _gap_series(market, spendings, reference, sign: float) -> np.ndarray:
    ref_terms = _phi_terms(market, reference)
    out = np.empty(spendings.shape[0] - 1)
    for t in range(1, spendings.shape[0]):
        out[t - 1] = sign * float((_phi_terms(market, spendings[t]) - ref_terms).sum())
    return out


def _strong_factor(sigma: float, T: np.ndarray) -> np.ndarray:
    q = 1.0 - sigma
    with np.errstate(divide="ignore"):
        qt = np.power(q, T)
    return sigma * qt / (1.0 - qt)


# ---------------------------------------------------------------------------
# Certificates

def bound_substitutes(market: MarketInstance, spendings: np.ndarray,
                      reference: np.ndarray, include_linear: bool | None = None
                      ) -> RateCertificate:
    kinds = _kinds(market)
    _require(kinds <= {UtilityKind.LINEAR, UtilityKind.SUBSTITUTES},
             "substitutes bounds need a pure-substitutes market")
    has_linear = UtilityKind.LINEAR in kinds
    if include_linear is None:
        include_linear = has_linear
    _require(include_linear or not has_linear,
             "the linear-rate bound excludes linear utilities")
    S = _weighted_kl0(market, reference, spendings[0], _subs_weight)
    emp = _gap_series(market, spendings, reference, +1.0)
    T = np.arange(1, spendings.shape[0], dtype=float)
    if include_linear:
        return _certificate("subst-1t", None, S / T, emp)
    sigma = float(np.min(1.0 - market.rhos))
    return _certificate("subst-strong", sigma, _strong_factor(sigma, T) * S, emp)


def bound_complements(market: MarketInstance, spendings: np.ndarray,
                      reference: np.ndarray, include_leontief: bool | None = None
                      ) -> RateCertificate:
    kinds = _kinds(market)
    _require(kinds <= {UtilityKind.COMPLEMENTS, UtilityKind.LEONTIEF},
             "complements bounds need a pure-complements market")
    has_leontief = UtilityKind.LEONTIEF in kinds
    if include_leontief is None:
        include_leontief = has_leontief
    _require(include_leontief or not has_leontief,
             "the linear-rate bound excludes Leontief utilities")
    S = _weighted_kl0(market, reference, spendings[0], _comp_weight)
    emp = _gap_series(market, spendings, reference, -1.0)
    T = np.arange(1, spendings.shape[0], dtype=float)
    if include_leontief:
        return _certificate("comp-1t", None, S / T, emp)
    sigma = float(np.min(1.0 / (1.0 - market.rhos)))
    return _certificate("comp-strong", sigma, _strong_factor(sigma, T) * S, emp)


def kl_contraction_check(market: MarketInstance, spendings: np.ndarray,
                   reference: np.ndarray) -> RateCertificate:
    _require(_kinds(market) == {UtilityKind.SUBSTITUTES},
             "the KL recursion needs strict substitutes (no linear buyers)")
    inv_rho = 1.0 / market.rhos
    series = np.array([
        sum(inv_rho[i] * kl(reference[i], spendings[t][i]) for i in range(market.m))
        for t in range(spendings.shape[0])
    ])
    rate = float(np.max(market.rhos))
    bound = series[0] * np.power(rate, np.arange(spendings.shape[0], dtype=float))
    return _certificate("kl-contraction", rate, bound, series, t_start=0)


def bound_saddle(market: MarketInstance, spendings: np.ndarray,
                 reference: np.ndarray, kind: str = "sublinear") -> RateCertificate:
    kinds = _kinds(market)
    _require(UtilityKind.COBB_DOUGLAS not in kinds,
             "saddle bounds exclude Cobb-Douglas buyers; use the full-range ones")
    subs = kinds & {UtilityKind.LINEAR, UtilityKind.SUBSTITUTES}
    comp = kinds & {UtilityKind.COMPLEMENTS, UtilityKind.LEONTIEF}
    _require(bool(subs) and bool(comp), "saddle bounds need a mixed market")
    d_g0 = _weighted_kl0(market, reference, spendings[0], _subs_weight)
    d_h0 = _weighted_kl0(market, reference, spendings[0], _comp_weight)
    residuals = np.array([
        saddle_residual(market, spendings[t], reference)
        for t in range(1, spendings.shape[0])
    ])
    nonnegative = bool(np.all(residuals >= -SLACK))
    T = np.arange(1, spendings.shape[0], dtype=float)
    if kind == "sublinear":
        bound = np.full_like(T, 2.0 * d_g0 + 2.0 * d_h0)
        return _certificate("saddle-sublinear", None, bound, np.cumsum(residuals),
                            extra_ok=nonnegative)
    if kind != "linear":
        raise ValueError(f"unknown saddle bound kind {kind!r}")
    _require(kinds == {UtilityKind.SUBSTITUTES, UtilityKind.COMPLEMENTS},
             "the linear saddle rate excludes linear and Leontief utilities")
    rhos = market.rhos
    sx = float(np.min(1.0 - rhos[rhos > 0]))
    sy = float(np.min(1.0 / (1.0 - rhos[rhos < 0])))
    sigma = min(sx, sy)
    coeff = (2.0 - sx) * d_g0 + (2.0 - sy) * d_h0
    bound = coeff * np.power(1.0 - sigma / 2.0, T - 1.0)
    return _certificate("saddle-linear", sigma, bound, residuals, extra_ok=nonnegative)


def _cobb_pinned_gap(market, spendings, reference, side_mask, sign) -> np.ndarray:
    ref_terms = _phi_terms(market, reference)
    out = np.empty(spendings.shape[0] - 1)
    for t in range(1, spendings.shape[0]):
        state = reference.copy()
        state[side_mask] = spendings[t][side_mask]
        out[t - 1] = sign * float((_phi_terms(market, state) - ref_terms).sum())
    return out


def bound_cobb_substitutes(market: MarketInstance, spendings: np.ndarray,
                           reference: np.ndarray, strong: bool = False
                           ) -> RateCertificate:
    kinds = _kinds(market)
    _require(kinds <= {UtilityKind.LINEAR, UtilityKind.SUBSTITUTES, UtilityKind.COBB_DOUGLAS},
             "needs a substitutes-side market (Cobb-Douglas allowed)")
    side = market.kind_mask(UtilityKind.LINEAR, UtilityKind.SUBSTITUTES)
    emp = _cobb_pinned_gap(market, spendings, reference, side, +1.0)
    T = np.arange(1, spendings.shape[0], dtype=float)
    kl_cd = _weighted_kl0(market, reference, spendings[0], _cd_weight)
    if not strong:
        S = _weighted_kl0(market, reference, spendings[0], _subs_weight) + kl_cd
        return _certificate("cobb-subst-1t", None, S / T, emp)
    _require(UtilityKind.LINEAR not in kinds, "the strong rate excludes linear utilities")
    rhos = market.rhos[side]
    sigma = float(np.min(1.0 / rhos))
    S = sum(kl(reference[i], spendings[0][i])
            for i in np.flatnonzero(side)) + kl_cd
    bound = (sigma - 1.0) / (np.power(sigma, T) - 1.0) * S
    return _certificate("cobb-subst-strong", sigma, bound, emp)


def bound_cobb_complements(market: MarketInstance, spendings: np.ndarray,
                           reference: np.ndarray, strong: bool = False
                           ) -> RateCertificate:
    kinds = _kinds(market)
    _require(kinds <= {UtilityKind.COMPLEMENTS, UtilityKind.LEONTIEF, UtilityKind.COBB_DOUGLAS},
             "needs a complements-side market (Cobb-Douglas allowed)")
    side = market.kind_mask(UtilityKind.COMPLEMENTS, UtilityKind.LEONTIEF)
    emp = _cobb_pinned_gap(market, spendings, reference, side, -1.0)
    T = np.arange(1, spendings.shape[0], dtype=float)
    kl_cd = _weighted_kl0(market, reference, spendings[0], _cd_weight)
    if not strong:
        S = _weighted_kl0(market, reference, spendings[0], _comp_weight) + kl_cd
        return _certificate("cobb-comp-1t", None, S / T, emp)
    _require(UtilityKind.LEONTIEF not in kinds, "the strong rate excludes Leontief utilities")
    rhos = market.rhos[side]
    sigma = float(np.min((rhos - 1.0) / rhos))
    S = sum(kl(reference[i], spendings[0][i])
            for i in np.flatnonzero(side)) + kl_cd
    bound = (sigma - 1.0) / (np.power(sigma, T) - 1.0) * S
    return _certificate("cobb-comp-strong", sigma, bound, emp)


def cobb_douglas_halving(market: MarketInstance, spendings: np.ndarray,
                         reference: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """KL(b_t Cobb-Douglas block || reference block) against 2^-t times its
    initial value, t = 0..T."""
    cd = np.flatnonzero(market.kind_mask(UtilityKind.COBB_DOUGLAS))
    _require(cd.size > 0, "no Cobb-Douglas buyers present")
    series = np.array([
        sum(kl(spendings[t][i], reference[i]) for i in cd)
        for t in range(spendings.shape[0])
    ])
    bound = series[0] * np.power(0.5, np.arange(spendings.shape[0], dtype=float))
    return series, bound


def bound_full_range(market: MarketInstance, spendings: np.ndarray,
                     reference: np.ndarray, kind: str = "1t") -> RateCertificate:
    b0 = spendings[0]
    residuals = np.array([
        saddle_residual(market, spendings[t], reference)
        for t in range(1, spendings.shape[0])
    ])
    T = np.arange(1, spendings.shape[0], dtype=float)
    kl_cd = _weighted_kl0(market, reference, b0, _cd_weight)
    rhos = market.rhos
    if kind == "1t":
        const = 4.0 * kl_cd
        for i, buyer in enumerate(market.buyers):
            d = kl(reference[i], b0[i])
            if buyer.kind is UtilityKind.COMPLEMENTS:
                const += 2.0 * (rhos[i] - 1.0) / rhos[i] * d
            elif buyer.kind in (UtilityKind.LINEAR, UtilityKind.SUBSTITUTES):
                const += 2.0 / rhos[i] * d
            elif buyer.kind is UtilityKind.LEONTIEF:
                const += d
        return _certificate("full-range-1t", None, np.full_like(T, const),
                            np.cumsum(residuals))
    if kind != "linear":
        raise ValueError(f"unknown full-range bound kind {kind!r}")
    kinds = _kinds(market)
    _require(kinds <= {UtilityKind.SUBSTITUTES, UtilityKind.COBB_DOUGLAS,
                       UtilityKind.COMPLEMENTS},
             "the full-range linear rate excludes linear and Leontief utilities")
    pos = rhos[rhos > 0]
    neg = rhos[rhos < 0]
    candidates = []
    if pos.size:
        candidates.append(float(np.min(2.0 / (1.0 + pos))))
    if neg.size:
        candidates.append(float(np.min(2.0 * (neg - 1.0) / (2.0 * neg - 1.0))))
    _require(bool(candidates), "need at least one strict CES buyer")
    sigma = min(candidates)
    const = 4.0 / (2.0 - sigma) * kl_cd
    for i, buyer in enumerate(market.buyers):
        d = kl(reference[i], b0[i])
        if buyer.kind is UtilityKind.COMPLEMENTS:
            const += (2.0 * rhos[i] - 1.0) / rhos[i] * d
        elif buyer.kind is UtilityKind.SUBSTITUTES:
            const += (1.0 + rhos[i]) / rhos[i] * d
    bound = const * np.power(sigma, -(T - 1.0))
    return _certificate("full-range-linear", sigma, bound, residuals)


def spending_kl_bounds(market: MarketInstance, spendings: np.ndarray,
                       reference: np.ndarray) -> list[RateCertificate]:
    """The alternate-measure inequalities: spending KL and price KL against
    potential gaps, on whichever domain the market belongs to."""
    kinds = _kinds(market)
    _require(UtilityKind.COBB_DOUGLAS not in kinds,
             "spending KL bounds are stated without Cobb-Douglas buyers")
    rhos = market.rhos
    p_ref = reference.sum(axis=0)
    n_steps = spendings.shape[0] - 1
    certs: list[RateCertificate] = []

    def series(fn):
        return np.array([fn(spendings[t]) for t in range(1, n_steps + 1)])

    if kinds <= {UtilityKind.LINEAR, UtilityKind.SUBSTITUTES}:
        gap = _gap_series(market, spendings, reference, +1.0)
        price = series(lambda b: kl(b.sum(axis=0), p_ref))
        if UtilityKind.LINEAR in kinds:
            certs.append(_certificate("spending-kl:price", None, gap, price))
            return certs
        coeff = float(np.max(rhos / (1.0 - rhos)))
        spend = series(lambda b: sum(kl(b[i], reference[i]) for i in range(market.m)))
        certs.append(_certificate("spending-kl:spend", coeff, coeff * gap, spend))
        certs.append(_certificate("spending-kl:price", coeff, coeff * gap, price))
        certs.append(_certificate("spending-kl:price-direct", None, gap, price))
        return certs
    if kinds <= {UtilityKind.COMPLEMENTS, UtilityKind.LEONTIEF}:
        _require(UtilityKind.LEONTIEF not in kinds,
                 "spending KL bounds exclude Leontief utilities")
        gap = _gap_series(market, spendings, reference, -1.0)
        coeff = float(np.max(-rhos))
        spend = series(lambda b: sum(kl(b[i], reference[i]) for i in range(market.m)))
        price = series(lambda b: kl(b.sum(axis=0), p_ref))
        certs.append(_certificate("spending-kl:spend", coeff, coeff * gap, spend))
        certs.append(_certificate("spending-kl:price", coeff, coeff * gap, price))
        return certs
    _require(kinds == {UtilityKind.SUBSTITUTES, UtilityKind.COMPLEMENTS},
             "mixed-domain spending KL bounds exclude linear and Leontief utilities")
    lhs = series(lambda b: sum(
        ((1.0 - rhos[i]) / rhos[i] if rhos[i] > 0 else -1.0 / rhos[i])
        * kl(b[i], reference[i])
        for i in range(market.m)
    ))
    rhs = series(lambda b: saddle_residual(market, b, reference))
    certs.append(_certificate("spending-kl:mixed", None, rhs, lhs))
    return certs


def uniform_initialization_kl(market: MarketInstance, reference: np.ndarray) -> tuple[float, float]:
    """Total KL(ref || uniform start) and the log(m n) yardstick it stays
    under once budgets are normalized to unit total."""
    b0 = uniform_spending(market)
    total = sum(kl(reference[i], b0[i]) for i in range(market.m))
    return float(total), float(np.log(market.m * market.goods))


# ---------------------------------------------------------------------------
# Dispatch (CLI entry)

def certify(market: MarketInstance, spendings: np.ndarray, reference: np.ndarray,
            theorem_id: str) -> list[RateCertificate]:
    if theorem_id == "subst-1t":
        return [bound_substitutes(market, spendings, reference, include_linear=True)]
    if theorem_id == "subst-strong":
        return [bound_substitutes(market, spendings, reference, include_linear=False)]
    if theorem_id == "comp-1t":
        return [bound_complements(market, spendings, reference, include_leontief=True)]
    if theorem_id == "comp-strong":
        return [bound_complements(market, spendings, reference, include_leontief=False)]
    if theorem_id == "kl-contraction":
        return [kl_contraction_check(market, spendings, reference)]
    if theorem_id == "saddle-sublinear":
        return [bound_saddle(market, spendings, reference, "sublinear")]
    if theorem_id == "saddle-linear":
        return [bound_saddle(market, spendings, reference, "linear")]
    if theorem_id == "cobb-subst-1t":
        return [bound_cobb_substitutes(market, spendings, reference, strong=False)]
    if theorem_id == "cobb-subst-strong":
        return [bound_cobb_substitutes(market, spendings, reference, strong=True)]
    if theorem_id == "cobb-comp-1t":
        return [bound_cobb_complements(market, spendings, reference, strong=False)]
    if theorem_id == "cobb-comp-strong":
        return [bound_cobb_complements(market, spendings, reference, strong=True)]
    if theorem_id == "full-range-1t":
        return [bound_full_range(market, spendings, reference, "1t")]
    if theorem_id == "full-range-linear":
        return [bound_full_range(market, spendings, reference, "linear")]
    if theorem_id == "spending-kl":
        return spending_kl_bounds(market, spendings, reference)
    raise ValueError(f"unknown theorem id {theorem_id!r}")
