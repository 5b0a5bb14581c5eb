"""Static Fisher-market data and the basic demand-side primitives.

A market has ``m`` buyers and ``n`` perfectly divisible goods, each with
unit supply. Buyer ``i`` has a budget ``e_i`` and a CES utility

    u_i(x_i) = (sum_j a_ij * x_ij**rho_i) ** (1/rho_i),

with the limits rho -> 1 (linear), rho -> 0 (Cobb-Douglas,
``prod_j x_ij**a_ij`` with the weights summing to one) and
rho -> -inf (Leontief, ``min_j x_ij / c_ij``). A spending state is an
(m, n) matrix ``b`` with row sums equal to the budgets; prices are the
column sums ``p_j = sum_i b_ij`` and the induced allocation is
``x_ij = b_ij / p_j``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import (
    CobbDouglasWeightsNotNormalized,
    EmptySupport,
    MarketFormatError,
    NegativeBudget,
    RhoOutOfRange,
    UndesiredGood,
    ValidationError,
    ZeroPrice,
)


class UtilityKind(str, Enum):
    LINEAR = "linear"
    SUBSTITUTES = "substitutes"
    COBB_DOUGLAS = "cobb_douglas"
    COMPLEMENTS = "complements"
    LEONTIEF = "leontief"


# Integer codes shared with the step kernels.
KIND_CODE = {
    UtilityKind.LINEAR: 0,
    UtilityKind.SUBSTITUTES: 1,
    UtilityKind.COBB_DOUGLAS: 2,
    UtilityKind.COMPLEMENTS: 3,
    UtilityKind.LEONTIEF: 4,
}

_CES_KINDS = (UtilityKind.SUBSTITUTES, UtilityKind.COMPLEMENTS)

_WEIGHT_SUM_TOL = 1e-12
_BUDGET_TOL = 1e-12


@dataclass(frozen=True)
class Buyer:
    """One buyer: utility class, good weights (a_ij, or c_ij for Leontief),
    budget, and the CES exponent for the two strict CES classes."""

    kind: UtilityKind
    weights: np.ndarray
    budget: float
    rho: float | None = None

    def __post_init__(self):
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=float))
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "kind", UtilityKind(self.kind))

    @property
    def effective_rho(self) -> float:
        """Numeric rho used by the update formulas: 1 for linear, 0 for
        Cobb-Douglas, -inf for Leontief."""
        if self.kind is UtilityKind.LINEAR:
            return 1.0
        if self.kind is UtilityKind.COBB_DOUGLAS:
            return 0.0
        if self.kind is UtilityKind.LEONTIEF:
            return -math.inf
        return float(self.rho)  # type: ignore[arg-type]

    @property
    def support(self) -> np.ndarray:
        return self.weights > 0.0


@dataclass(frozen=True)
class MarketInstance:
    buyers: tuple[Buyer, ...]
    goods: int

    def __post_init__(self):
        object.__setattr__(self, "buyers", tuple(self.buyers))

    @property
    def m(self) -> int:
        return len(self.buyers)

    @property
    def n(self) -> int:
        return self.goods

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.array([b.weights for b in self.buyers], dtype=float)
        w.setflags(write=False)
        return w

    @cached_property
    def budgets(self) -> np.ndarray:
        e = np.array([b.budget for b in self.buyers], dtype=float)
        e.setflags(write=False)
        return e

    @cached_property
    def rhos(self) -> np.ndarray:
        r = np.array([b.effective_rho for b in self.buyers], dtype=float)
        r.setflags(write=False)
        return r

    @cached_property
    def kinds(self) -> np.ndarray:
        k = np.array([KIND_CODE[b.kind] for b in self.buyers], dtype=np.int64)
        k.setflags(write=False)
        return k

    def kind_mask(self, *kinds: UtilityKind) -> np.ndarray:
        codes = {KIND_CODE[k] for k in kinds}
        return np.array([c in codes for c in self.kinds], dtype=bool)

    @property
    def has_cobb_douglas(self) -> bool:
        return any(b.kind is UtilityKind.COBB_DOUGLAS for b in self.buyers)

    def to_dict(self) -> dict:
        buyers = []
        for b in self.buyers:
            entry: dict = {
                "class": b.kind.value,
                "weights": [float(x) for x in b.weights],
                "budget": float(b.budget),
            }
            if b.kind in _CES_KINDS:
                entry["rho"] = float(b.rho)  # type: ignore[arg-type]
            buyers.append(entry)
        return {"goods": self.goods, "buyers": buyers}

    @classmethod
    def from_dict(cls, doc: dict) -> "MarketInstance":
        if set(doc) != {"goods", "buyers"}:
            unknown = set(doc) - {"goods", "buyers"}
            raise MarketFormatError(f"unexpected top-level fields: {sorted(unknown)}")
        buyers = []
        for idx, entry in enumerate(doc["buyers"]):
            allowed = {"class", "rho", "weights", "budget"}
            unknown = set(entry) - allowed
            if unknown:
                raise MarketFormatError(f"buyer {idx}: unexpected fields {sorted(unknown)}")
            try:
                kind = UtilityKind(entry["class"])
            except (ValueError, KeyError) as exc:
                raise MarketFormatError(f"buyer {idx}: bad utility class") from exc
            rho = entry.get("rho")
            if kind in _CES_KINDS:
                if rho is None:
                    raise MarketFormatError(f"buyer {idx}: rho required for {kind.value}")
            elif rho is not None:
                raise MarketFormatError(f"buyer {idx}: rho not allowed for {kind.value}")
            buyers.append(
                Buyer(kind=kind, weights=np.asarray(entry["weights"], dtype=float),
                      budget=float(entry["budget"]), rho=None if rho is None else float(rho))
            )
        return validate(cls(buyers=tuple(buyers), goods=int(doc["goods"])))


def validate(market: MarketInstance) -> MarketInstance:
    """Check every structural invariant; returns the instance unchanged.

    Raises a :class:`ValidationError` subclass naming the first violated
    invariant.
    """
    if market.m < 1 or market.goods < 1:
        raise ValidationError("need at least one buyer and one good")
    for i, b in enumerate(market.buyers):
        if b.weights.ndim != 1 or b.weights.shape[0] != market.goods:
            raise ValidationError(f"buyer {i}: weight vector must have length {market.goods}")
        if not np.all(np.isfinite(b.weights)) or np.any(b.weights < 0):
            raise ValidationError(f"buyer {i}: weights must be finite and nonnegative")
        if not (math.isfinite(b.budget) and b.budget > 0):
            raise NegativeBudget(f"buyer {i}: budget must be positive, got {b.budget}")
        if not np.any(b.weights > 0):
            raise EmptySupport(f"buyer {i}: needs at least one positive weight")
        if b.kind is UtilityKind.SUBSTITUTES:
            if b.rho is None or not (0.0 < b.rho < 1.0):
                raise RhoOutOfRange(f"buyer {i}: substitutes rho must lie in (0, 1)")
        elif b.kind is UtilityKind.COMPLEMENTS:
            if b.rho is None or not (b.rho < 0.0 and math.isfinite(b.rho)):
                raise RhoOutOfRange(f"buyer {i}: complements rho must be finite and negative")
        elif b.rho is not None:
            raise RhoOutOfRange(f"buyer {i}: rho only allowed for the two CES classes")
        if b.kind is UtilityKind.COBB_DOUGLAS:
            if abs(float(b.weights.sum()) - 1.0) > _WEIGHT_SUM_TOL:
                raise CobbDouglasWeightsNotNormalized(
                    f"buyer {i}: Cobb-Douglas weights sum to {b.weights.sum()!r}, expected 1"
                )
    desired = np.any(market.weights > 0, axis=0)
    if not np.all(desired):
        j = int(np.argmin(desired))
        raise UndesiredGood(f"good {j} is desired by no buyer")
    return market


def uniform_spending(market: MarketInstance) -> np.ndarray:
    """The b_ij = e_i / n starting state."""
    return np.repeat(market.budgets[:, None] / market.goods, market.goods, axis=1)


def check_spending(market: MarketInstance, b: np.ndarray) -> np.ndarray:
    """Validate a spending matrix: shape, nonnegativity, row sums = budgets."""
    b = np.asarray(b, dtype=float)
    if b.shape != (market.m, market.goods):
        raise ValidationError(f"spending must have shape {(market.m, market.goods)}")
    if np.any(b < 0) or not np.all(np.isfinite(b)):
        raise ValidationError("spending must be finite and nonnegative")
    rows = b.sum(axis=1)
    if np.any(np.abs(rows - market.budgets) > _BUDGET_TOL * market.budgets):
        i = int(np.argmax(np.abs(rows - market.budgets) / market.budgets))
        raise ValidationError(f"row {i} sums to {rows[i]!r}, budget is {market.budgets[i]!r}")
    return b


def prices(b: np.ndarray) -> np.ndarray:
    """Column sums p_j = sum_i b_ij. Raises ZeroPrice when some good
    receives no spending at all."""
    p = np.asarray(b, dtype=float).sum(axis=0)
    if np.any(p <= 0.0):
        j = int(np.argmin(p))
        raise ZeroPrice(f"good {j} has zero price")
    return p


def allocation(b: np.ndarray, p: np.ndarray | None = None) -> np.ndarray:
    """x_ij = b_ij / p_j."""
    if p is None:
        p = prices(b)
    return np.asarray(b, dtype=float) / p


def excess_demand(b: np.ndarray, p_prev: np.ndarray) -> np.ndarray:
    """z_j = sum_i b_ij / p_prev_j - 1: demand the new spending represents
    at the previous round's prices, minus unit supply."""
    return np.asarray(b, dtype=float).sum(axis=0) / np.asarray(p_prev, dtype=float) - 1.0


def utility_value(buyer: Buyer, x: np.ndarray) -> float:
    """u_i at a single allocation row, with the boundary conventions
    0*log 0 = 0 and 0**0 = 1."""
    x = np.asarray(x, dtype=float)
    a = buyer.weights
    sup = a > 0
    if buyer.kind is UtilityKind.LINEAR:
        return float(a @ x)
    if buyer.kind is UtilityKind.COBB_DOUGLAS:
        if np.any(x[sup] == 0):
            return 0.0
        return float(math.exp(float(a[sup] @ np.log(x[sup]))))
    if buyer.kind is UtilityKind.LEONTIEF:
        return float(np.min(x[sup] / a[sup]))
    rho = float(buyer.rho)  # type: ignore[arg-type]
    xs = x[sup]
    if rho < 0 and np.any(xs == 0):
        return 0.0
    with np.errstate(divide="ignore"):
        s = float(a[sup] @ np.power(xs, rho))
    if s == 0.0:
        return 0.0
    return float(s ** (1.0 / rho))


def best_response_spending(buyer: Buyer, p: np.ndarray) -> np.ndarray:
    """Spending of a budget-e_i utility-maximizing demand bundle at prices p.

    Linear utilities put everything on the highest a_ij/p_j goods, split
    uniformly over exact ties.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise ZeroPrice("best response needs strictly positive prices")
    a = buyer.weights
    e = buyer.budget
    if buyer.kind is UtilityKind.LINEAR:
        bang = np.where(a > 0, a / p, -np.inf)
        top = bang.max()
        ties = bang >= top - 1e-12 * abs(top)
        out = np.zeros_like(p)
        out[ties] = e / ties.sum()
        return out
    if buyer.kind is UtilityKind.COBB_DOUGLAS:
        return e * a
    if buyer.kind is UtilityKind.LEONTIEF:
        w = a * p
        return e * w / w.sum()
    rho = float(buyer.rho)  # type: ignore[arg-type]
    with np.errstate(divide="ignore"):
        logw = np.where(a > 0, (np.log(a) - rho * np.log(p)) / (1.0 - rho), -np.inf)
    logw -= logw.max()
    w = np.exp(logw)
    return e * w / w.sum()


# ---------------------------------------------------------------------------
# Random instance generation

_RHO_SPEC_DEFAULTS = {
    "substitutes": (0.2, 0.8),
    "substitutes_linear": (0.2, 0.8),
    "complements": (-4.0, -0.25),
    "complements_leontief": (-4.0, -0.25),
    "mixed": None,
    "full": None,
    "everything": None,
    "linear": None,
    "cobb_douglas": None,
    "leontief": None,
}


def _parse_rho_spec(spec: str):
    spec = spec.strip()
    name, lo, hi = spec, None, None
    for opener, closer in ((":", ""), ("(", ")")):
        if opener in spec:
            name, _, rest = spec.partition(opener)
            rest = rest.rstrip(closer)
            parts = [s for s in rest.split(",") if s.strip()]
            if len(parts) != 2:
                raise ValidationError(f"bad rho range in spec {spec!r}")
            lo, hi = float(parts[0]), float(parts[1])
            break
    name = name.strip()
    if name not in _RHO_SPEC_DEFAULTS:
        raise ValidationError(f"unknown rho spec {name!r}")
    if lo is None:
        rng = _RHO_SPEC_DEFAULTS[name]
        if rng is not None:
            lo, hi = rng
    if lo is not None and lo > hi:
        raise ValidationError(f"empty rho range in spec {spec!r}")
    return name, lo, hi


def _draw_kind_and_rho(name, lo, hi, i, m, rng) -> tuple[UtilityKind, float | None]:
    def subs_rho():
        top = min(hi, math.nextafter(1.0, 0.0)) if hi is not None else 0.8
        return float(rng.uniform(lo, top))

    def comp_rho():
        return float(rng.uniform(lo, min(hi, -1e-9)))

    if name == "linear":
        return UtilityKind.LINEAR, None
    if name == "cobb_douglas":
        return UtilityKind.COBB_DOUGLAS, None
    if name == "leontief":
        return UtilityKind.LEONTIEF, None
    if name == "substitutes":
        return UtilityKind.SUBSTITUTES, subs_rho()
    if name == "complements":
        return UtilityKind.COMPLEMENTS, comp_rho()
    if name == "substitutes_linear":
        # Buyer 0 is always linear so the class is actually exercised.
        if i == 0 or (hi is not None and hi >= 1.0 and rng.uniform() < 0.25):
            return UtilityKind.LINEAR, None
        return UtilityKind.SUBSTITUTES, subs_rho()
    if name == "complements_leontief":
        if i == 0 or rng.uniform() < 0.25:
            return UtilityKind.LEONTIEF, None
        return UtilityKind.COMPLEMENTS, comp_rho()
    if name == "mixed":
        if m < 2:
            raise ValidationError("mixed markets need at least two buyers")
        if i == 0:
            return UtilityKind.SUBSTITUTES, float(rng.uniform(0.2, 0.8))
        if i == 1:
            return UtilityKind.COMPLEMENTS, float(rng.uniform(-4.0, -0.25))
        if rng.uniform() < 0.5:
            return UtilityKind.SUBSTITUTES, float(rng.uniform(0.2, 0.8))
        return UtilityKind.COMPLEMENTS, float(rng.uniform(-4.0, -0.25))
    if name == "full":
        if m < 3:
            raise ValidationError("full-range markets need at least three buyers")
        order = (UtilityKind.SUBSTITUTES, UtilityKind.COBB_DOUGLAS, UtilityKind.COMPLEMENTS)
        kind = order[i] if i < 3 else order[int(rng.integers(3))]
    else:  # everything
        if m < 5:
            raise ValidationError("spec 'everything' needs at least five buyers")
        order = (UtilityKind.LINEAR, UtilityKind.SUBSTITUTES, UtilityKind.COBB_DOUGLAS,
                 UtilityKind.COMPLEMENTS, UtilityKind.LEONTIEF)
        kind = order[i] if i < 5 else order[int(rng.integers(5))]
    if kind is UtilityKind.SUBSTITUTES:
        return kind, float(rng.uniform(0.2, 0.8))
    if kind is UtilityKind.COMPLEMENTS:
        return kind, float(rng.uniform(-4.0, -0.25))
    return kind, None


def generate_random(m: int, n: int, rho_spec: str = "mixed", seed: int = 0,
                    normalize_budgets: bool = False) -> MarketInstance:
    """Deterministic random market: weights log-uniform on [0.1, 10]
    (Cobb-Douglas rows renormalized), budgets uniform on [0.5, 2].

    The same (m, n, rho_spec, seed, normalize_budgets) always produces a
    bit-identical instance; draws happen buyer by buyer in a fixed order.
    With ``normalize_budgets`` the budgets are rescaled to sum to one.
    """
    if m < 1 or n < 1:
        raise ValidationError("need m >= 1 and n >= 1")
    name, lo, hi = _parse_rho_spec(rho_spec)
    rng = np.random.default_rng(seed)
    kinds: list[UtilityKind] = []
    rhos: list[float | None] = []
    raw_weights = []
    raw_budgets = []
    for i in range(m):
        kind, rho = _draw_kind_and_rho(name, lo, hi, i, m, rng)
        w = np.exp(rng.uniform(math.log(0.1), math.log(10.0), size=n))
        if kind is UtilityKind.COBB_DOUGLAS:
            w = w / w.sum()
        kinds.append(kind)
        rhos.append(rho)
        raw_weights.append(w)
        raw_budgets.append(float(rng.uniform(0.5, 2.0)))
    budgets = np.array(raw_budgets)
    if normalize_budgets:
        budgets = budgets / budgets.sum()
    buyers = tuple(
        Buyer(kind=k, weights=w, budget=float(e), rho=r)
        for k, w, e, r in zip(kinds, raw_weights, budgets, rhos)
    )
    return validate(MarketInstance(buyers=buyers, goods=n))


def load_market(path) -> MarketInstance:
    with open(path, "r", encoding="utf-8") as fh:
        return MarketInstance.from_dict(json.load(fh))


def save_market(market: MarketInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(market.to_dict(), fh, indent=1)
        fh.write("\n")
