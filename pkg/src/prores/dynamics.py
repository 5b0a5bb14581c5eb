"""Spending update rules and the round-synchronous trajectory runner.

Three rules are provided.

* ``PR``: each substitutes buyer (0 < rho <= 1) splits her budget in
  proportion to a_ij (b_ij/p_j)**rho; each complements buyer best-responds
  to the current prices, b_ij proportional to (a_ij / p_j**rho)**(1/(1-rho))
  (c_ij p_j for Leontief); Cobb-Douglas buyers jump to their fixed split
  e_i a_ij.
* ``DAMPED_PR``: every class moves to the normalized geometric mean of the
  current spending and its undamped target, which equals an entropic
  mirror step at half the step size.
* ``GENERALIZED_PR``: the substitutes-form rule applied regardless of the
  sign of rho. With complements buyers this can cycle instead of
  converging; it exists to demonstrate exactly that.

All rows of round t+1 depend only on round-t state, so a whole round is a
pure function of the spending matrix.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels
from .bregman import kl
from .errors import IncompatibleRule, SupportMismatch, ValidationError, ZeroPrice
from .market import MarketInstance, UtilityKind, check_spending, uniform_spending
from .potential import phi


class Rule(str, Enum):
    PR = "pr"
    DAMPED_PR = "damped-pr"
    GENERALIZED_PR = "generalized-pr"


_MODE = {
    Rule.PR: _kernels.MODE_PR,
    Rule.DAMPED_PR: _kernels.MODE_DAMPED,
    Rule.GENERALIZED_PR: _kernels.MODE_GENERALIZED,
}


def _kernel_step(market: MarketInstance, b: np.ndarray, mode: int) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if np.any(b.sum(axis=0) <= 0.0):
        raise ZeroPrice("update rules need strictly positive prices")
    out = _kernels.step_round(b, market.kinds, market.rhos, market.weights,
                              market.budgets, mode)
    if np.any(np.isnan(out)):
        raise ValidationError("a buyer row lost all its mass; invalid state")
    return out


def check_rule(market: MarketInstance, rule: Rule) -> None:
    if rule is Rule.GENERALIZED_PR:
        bad = market.kind_mask(UtilityKind.COBB_DOUGLAS, UtilityKind.LEONTIEF)
        if bad.any():
            raise IncompatibleRule(
                "generalized PR needs finite nonzero rho for every buyer"
            )


def pr_substitutes_step(market: MarketInstance, b: np.ndarray) -> np.ndarray:
    """One PR round for the rho in (0, 1] rows; other rows pass through."""
    out = _kernel_step(market, b, _kernels.MODE_PR)
    mask = market.kind_mask(UtilityKind.LINEAR, UtilityKind.SUBSTITUTES)
    result = np.array(b, dtype=float, copy=True)
    result[mask] = out[mask]
    return result


def pr_complements_step(market: MarketInstance, b: np.ndarray) -> np.ndarray:
    """One best-response round for the rho < 0 and Leontief rows."""
    out = _kernel_step(market, b, _kernels.MODE_PR)
    mask = market.kind_mask(UtilityKind.COMPLEMENTS, UtilityKind.LEONTIEF)
    result = np.array(b, dtype=float, copy=True)
    result[mask] = out[mask]
    return result


def pr_step(market: MarketInstance, b: np.ndarray) -> np.ndarray:
    """One full PR round for all buyer classes at once."""
    return _kernel_step(market, b, _kernels.MODE_PR)


def damped_pr_step(market: MarketInstance, b: np.ndarray) -> np.ndarray:
    """One damped round: geometric mean with the undamped target, per class."""
    return _kernel_step(market, b, _kernels.MODE_DAMPED)


def generalized_pr_step(market: MarketInstance, b: np.ndarray) -> np.ndarray:
    """The substitutes-form rule for every buyer, any finite nonzero rho."""
    check_rule(market, Rule.GENERALIZED_PR)
    return _kernel_step(market, b, _kernels.MODE_GENERALIZED)


def step(market: MarketInstance, b: np.ndarray, rule: Rule) -> np.ndarray:
    rule = Rule(rule)
    check_rule(market, rule)
    return _kernel_step(market, b, _MODE[rule])


@dataclass
class DynamicsConfig:
    rule: Rule = Rule.PR
    max_iters: int = 1000
    stop_phi_gap: float = 1e-12
    record_every: int = 1
    initial: object = "uniform"  # "uniform" or an (m, n) spending matrix
    record_spending: bool = False

    def __post_init__(self):
        self.rule = Rule(self.rule)
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if self.stop_phi_gap < 0:
            raise ValidationError("stop_phi_gap must be >= 0")
        if self.record_every < 1:
            raise ValidationError("record_every must be >= 1")


@dataclass
class TraceRecord:
    iter: int
    phi: float
    phi_gap_vs_ref: float | None = None
    kl_spend_to_ref: float | None = None
    kl_price_to_ref: float | None = None
    max_excess_demand: float = 0.0
    spending: np.ndarray | None = None


def _safe_kl_rows(b: np.ndarray, ref: np.ndarray) -> float:
    total = 0.0
    for i in range(b.shape[0]):
        try:
            total += kl(b[i], ref[i])
        except SupportMismatch:
            return float("nan")
    return total


def run(market: MarketInstance, config: DynamicsConfig,
        reference: np.ndarray | None = None) -> list[TraceRecord]:
    """Iterate the configured rule, recording every ``record_every`` rounds
    and always at round 0 and the final round.

    With a reference spending the trace stops early once
    |Phi(b_t) - Phi(reference)| < stop_phi_gap.
    """
    check_rule(market, config.rule)
    if isinstance(config.initial, str):
        if config.initial != "uniform":
            raise ValidationError(f"unknown initial state {config.initial!r}")
        b = uniform_spending(market)
    else:
        b = check_spending(market, np.array(config.initial, dtype=float))

    ref_phi = None
    ref_prices = None
    if reference is not None:
        reference = check_spending(market, np.asarray(reference, dtype=float))
        ref_phi = phi(market, reference).phi
        ref_prices = reference.sum(axis=0)

    mode = _MODE[config.rule]
    records: list[TraceRecord] = []

    def record(t: int, b_t: np.ndarray, phi_t: float, zmax: float):
        rec = TraceRecord(iter=t, phi=phi_t, max_excess_demand=zmax)
        if reference is not None:
            rec.phi_gap_vs_ref = phi_t - ref_phi
            rec.kl_spend_to_ref = _safe_kl_rows(b_t, reference)
            rec.kl_price_to_ref = kl(b_t.sum(axis=0), ref_prices)
        if config.record_spending:
            rec.spending = b_t.copy()
        records.append(rec)

    record(0, b, phi(market, b).phi, 0.0)
    for t in range(1, config.max_iters + 1):
        p_prev = b.sum(axis=0)
        b = _kernel_step(market, b, mode)
        phi_t = phi(market, b).phi
        zmax = float(np.max(np.abs(b.sum(axis=0) / p_prev - 1.0)))
        stop = (
            reference is not None
            and config.stop_phi_gap > 0
            and abs(phi_t - ref_phi) < config.stop_phi_gap
        )
        if t % config.record_every == 0 or t == config.max_iters or stop:
            record(t, b, phi_t, zmax)
        if stop:
            break
    return records


def simulate(market: MarketInstance, rule: Rule, iters: int,
             initial: np.ndarray | None = None) -> np.ndarray:
    """Plain trajectory: (iters + 1, m, n) array of spendings, round 0 first."""
    rule = Rule(rule)
    check_rule(market, rule)
    b = uniform_spending(market) if initial is None else check_spending(
        market, np.array(initial, dtype=float))
    out = np.empty((iters + 1, market.m, market.goods))
    out[0] = b
    mode = _MODE[rule]
    for t in range(1, iters + 1):
        b = _kernel_step(market, b, mode)
        out[t] = b
    return out


def spending_array(records: list[TraceRecord]) -> np.ndarray:
    """Stack the recorded spendings of a gap-free trace into one array."""
    if any(r.spending is None for r in records):
        raise ValidationError("trace was recorded without spending snapshots")
    iters = [r.iter for r in records]
    if iters != list(range(len(records))):
        raise ValidationError("need record_every=1 snapshots for a spending array")
    return np.stack([r.spending for r in records])


# ---------------------------------------------------------------------------
# Trace I/O

TRACE_FIELDS = ("iter", "phi", "phi_gap", "kl_spend", "kl_price", "max_excess_demand")


def _fmt(x) -> str:
    if x is None:
        return "nan"
    return format(float(x), ".17g")


def write_trace_csv(records: list[TraceRecord], path, manifest: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if manifest is not None:
            fh.write("# manifest: " + json.dumps(manifest, sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(TRACE_FIELDS)
        for r in records:
            writer.writerow([
                r.iter, _fmt(r.phi), _fmt(r.phi_gap_vs_ref), _fmt(r.kl_spend_to_ref),
                _fmt(r.kl_price_to_ref), _fmt(r.max_excess_demand),
            ])


def read_trace_csv(path) -> tuple[list[dict], dict | None]:
    manifest = None
    rows: list[dict] = []
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if first.startswith("# manifest: "):
            manifest = json.loads(first[len("# manifest: "):])
            header = fh.readline()
        else:
            header = first
        names = header.strip().split(",")
        for line in fh:
            if not line.strip():
                continue
            vals = line.strip().split(",")
            row = {k: (int(v) if k == "iter" else float(v)) for k, v in zip(names, vals)}
            rows.append(row)
    return rows, manifest


def write_spending_jsonl(records: list[TraceRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            if r.spending is None:
                continue
            fh.write(json.dumps({"iter": r.iter, "spending": r.spending.tolist()}))
            fh.write("\n")
