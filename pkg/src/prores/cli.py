"""Command-line driver.

Subcommands: generate, run, solve, verify, bounds, cycle-demo. Exit codes:
0 success, 1 a checked assertion or bound failed, 2 usage error. The
PRORES_LOG environment variable sets the logging level (debug/info/...).

All randomness flows through the --seed argument of `generate`; traces and
certificates embed a manifest of the arguments that produced them, so any
artifact can be regenerated from its header.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import dynamics, equilibrium, market as mkt, rates
from .errors import IncompatibleRule, ProresError, ValidationError, WrongDomain

log = logging.getLogger("prores")


def _setup_logging():
    level = os.environ.get("PRORES_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _summary(m: mkt.MarketInstance) -> str:
    counts: dict[str, int] = {}
    for b in m.buyers:
        counts[b.kind.value] = counts.get(b.kind.value, 0) + 1
    parts = ", ".join(f"{v} {k}" for k, v in sorted(counts.items()))
    return f"{m.m} buyers ({parts}), {m.goods} goods, total budget {m.budgets.sum():.17g}"


def cmd_generate(args) -> int:
    m = mkt.generate_random(args.m, args.n, args.rho, args.seed,
                            normalize_budgets=args.normalize_budgets)
    mkt.save_market(m, args.output)
    manifest = {"command": "generate", "m": args.m, "n": args.n, "rho": args.rho,
                "seed": args.seed, "normalize_budgets": args.normalize_budgets}
    print(json.dumps(manifest, sort_keys=True))
    print(_summary(m))
    return 0


def cmd_run(args) -> int:
    m = mkt.load_market(args.market)
    rule = dynamics.Rule(args.rule)
    kinds = {b.kind for b in m.buyers}
    subs_side = kinds & {mkt.UtilityKind.LINEAR, mkt.UtilityKind.SUBSTITUTES}
    comp_side = kinds & {mkt.UtilityKind.COMPLEMENTS, mkt.UtilityKind.LEONTIEF}
    if rule is dynamics.Rule.PR and subs_side and comp_side:
        print("warning: plain proportional response has no guarantee on mixed "
              "markets; use damped-pr", file=sys.stderr)
    reference = equilibrium.load_spending(args.ref) if args.ref else None
    initial = "uniform" if args.initial is None else equilibrium.load_spending(args.initial)
    config = dynamics.DynamicsConfig(
        rule=rule, max_iters=args.iters, record_every=args.record_every,
        record_spending=args.snapshots is not None,
        stop_phi_gap=args.stop_phi_gap, initial=initial,
    )
    log.info("running %s for %d rounds on %s", rule.value, args.iters, args.market)
    records = dynamics.run(m, config, reference=reference)
    manifest = {"command": "run", "market": str(args.market), "rule": rule.value,
                "iters": args.iters, "record_every": args.record_every,
                "stop_phi_gap": args.stop_phi_gap, "ref": args.ref and str(args.ref),
                "initial": args.initial and str(args.initial)}
    dynamics.write_trace_csv(records, args.output, manifest=manifest)
    if args.snapshots:
        dynamics.write_spending_jsonl(records, args.snapshots)
    print(f"wrote {len(records)} records to {args.output}")
    return 0


def cmd_solve(args) -> int:
    m = mkt.load_market(args.market)
    log.info("solving %s (tol %g, cap %d rounds)", args.market, args.tol, args.max_iters)
    cert = equilibrium.solve(m, tol=args.tol, max_iters=args.max_iters)
    manifest = {"command": "solve", "market": str(args.market), "tol": args.tol,
                "max_iters": args.max_iters}
    cert.to_json(args.output, manifest=manifest)
    print(f"converged in {cert.iterations} rounds; clearing residual "
          f"{cert.clearing_residual:.3g}, best-response residual {cert.br_residual:.3g}, "
          f"valid={cert.valid}")
    return 0 if cert.valid else 1


def cmd_verify(args) -> int:
    m = mkt.load_market(args.market)
    b = equilibrium.load_spending(args.spending)
    cert = equilibrium.verify(m, b, tol=args.tol)
    print(json.dumps({"clearing_residual": cert.clearing_residual,
                      "br_residual": cert.br_residual, "valid": cert.valid}))
    return 0 if cert.valid else 1


def cmd_bounds(args) -> int:
    m = mkt.load_market(args.market)
    rows, manifest = dynamics.read_trace_csv(args.trace)
    if manifest is None or manifest.get("command") != "run":
        raise ValidationError("trace file lacks the manifest header written by `run`")
    iters = manifest["iters"]
    initial = None
    if manifest.get("initial"):
        initial = equilibrium.load_spending(manifest["initial"])
    spendings = dynamics.simulate(m, dynamics.Rule(manifest["rule"]), iters,
                                  initial=initial)
    # The trace must belong to this market: recompute phi at recorded rounds.
    from .potential import phi
    for row in rows:
        t = row["iter"]
        if t > iters:
            raise ValidationError("trace records more rounds than its manifest")
        expected = phi(m, spendings[t]).phi
        if not (abs(row["phi"] - expected) <= 1e-9 * (1 + abs(expected))):
            raise ValidationError(
                f"trace is inconsistent with market/rule at round {t}: "
                f"{row['phi']!r} vs recomputed {expected!r}")
    reference = equilibrium.load_spending(args.ref)
    certs = rates.certify(m, spendings, reference, args.theorem)
    all_hold = all(c.holds for c in certs)
    for i, cert in enumerate(certs):
        stem = args.output
        if len(certs) > 1:
            stem = f"{args.output}.{i}"
        series_path = f"{stem}.series.csv"
        cert.write_series_csv(series_path)
        cert.to_json(stem, series_csv_path=series_path)
        print(f"{cert.theorem_id}: holds={cert.holds} "
              f"max_violation={cert.max_violation:.3g}")
    return 0 if all_hold else 1


def cmd_cycle_demo(args) -> int:
    buyers = tuple(
        mkt.Buyer(kind=mkt.UtilityKind.COMPLEMENTS, weights=np.array([0.5, 0.5]),
                  budget=1.0, rho=-1.0)
        for _ in range(2)
    )
    m = mkt.validate(mkt.MarketInstance(buyers=buyers, goods=2))
    b0 = np.array([[0.25, 0.75], [0.75, 0.25]])
    rule = dynamics.Rule(args.rule)
    spendings = dynamics.simulate(m, rule, args.iters, initial=b0)
    for t in range(spendings.shape[0]):
        flat = " ".join(format(v, ".17g") for v in spendings[t].ravel())
        print(f"t={t}: {flat}")
    if rule is dynamics.Rule.GENERALIZED_PR and args.iters >= 2:
        period_two = bool(np.max(np.abs(spendings[2] - spendings[0])) < 1e-12)
        print(f"period-2 cycle: {period_two}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prores")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a random market instance")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rho", default="mixed",
                   help="utility-class spec, e.g. substitutes:0.2,0.8 or mixed")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normalize-budgets", action="store_true")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="iterate a rule and write the trace CSV")
    p.add_argument("--market", required=True)
    p.add_argument("--rule", choices=[r.value for r in dynamics.Rule], default="pr")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--stop-phi-gap", type=float, default=1e-12)
    p.add_argument("--ref", default=None, help="equilibrium JSON for gap columns")
    p.add_argument("--initial", default=None,
                   help="start from the spending in this JSON instead of uniform")
    p.add_argument("--snapshots", default=None, help="also write spending JSONL here")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("solve", help="find an equilibrium and write its certificate")
    p.add_argument("--market", required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iters", type=int, default=200_000)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check equilibrium conditions of a spending state")
    p.add_argument("--market", required=True)
    p.add_argument("--spending", required=True, help="certificate JSON to check")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bounds", help="check a convergence bound against a trace")
    p.add_argument("--theorem", required=True, choices=rates.THEOREM_IDS)
    p.add_argument("--trace", required=True)
    p.add_argument("--market", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("-o", "--output", default="certificate.json")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("cycle-demo", help="the 2x2 complements market that cycles "
                                          "under the substitutes-form rule")
    p.add_argument("--iters", type=int, default=2)
    p.add_argument("--rule", choices=[r.value for r in dynamics.Rule],
                   default="generalized-pr")
    p.set_defaults(func=cmd_cycle_demo)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, WrongDomain, IncompatibleRule, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ProresError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
